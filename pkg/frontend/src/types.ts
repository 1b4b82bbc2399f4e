// Wire types mirroring the annotation service's JSON schema.

export interface CellDoc {
  row: number;
  col: number;
  pattern: number;
  bbox: [number, number, number, number];
}

export interface AnnotationDoc {
  schema: string;
  image: string;
  size: [number, number];
  frame: string;
  skew_degrees: number;
  revision: number;
  recto: Array<[number, number]>;
  verso: Array<[number, number]>;
  cells: CellDoc[];
  meta: Record<string, unknown>;
}

export interface GridDoc {
  x_lines: number[];
  y_lines: number[];
  columns: Array<[number, number]>;
  rows: Array<[number, number, number]>;
}

export interface AutoResponse {
  annotation: AnnotationDoc;
  grid: GridDoc | null;
  notes: string[];
}

export interface PageInfo {
  id: string;
  image: string;
  book: string;
  split: string;
  has_annotation: boolean;
}

export const ANNOTATION_SCHEMA = "braillekit-annotation/1";

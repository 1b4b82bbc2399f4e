// A small hand-built grid: 2 cell rows x 3 cell columns at 20 px dot pitch.

import type { AnnotationDoc, AutoResponse, GridDoc } from "../src/types.js";
import { ANNOTATION_SCHEMA } from "../src/types.js";

export function makeGrid(rows = 2, cols = 3, pitch = 20, cellPitch = 50, linePitch = 80): GridDoc {
  const x_lines: number[] = [];
  const columns: Array<[number, number]> = [];
  for (let c = 0; c < cols; c++) {
    columns.push([x_lines.length, x_lines.length + 1]);
    x_lines.push(40 + c * cellPitch, 40 + c * cellPitch + pitch);
  }
  const y_lines: number[] = [];
  const gridRows: Array<[number, number, number]> = [];
  for (let r = 0; r < rows; r++) {
    gridRows.push([y_lines.length, y_lines.length + 1, y_lines.length + 2]);
    y_lines.push(40 + r * linePitch, 40 + r * linePitch + pitch, 40 + r * linePitch + 2 * pitch);
  }
  return { x_lines, y_lines, columns, rows: gridRows };
}

export function makeAuto(grid: GridDoc = makeGrid()): AutoResponse {
  const annotation: AnnotationDoc = {
    schema: ANNOTATION_SCHEMA,
    image: "page.png",
    size: [400, 300],
    frame: "deskewed",
    skew_degrees: 0.0,
    revision: 0,
    recto: [],
    verso: [],
    cells: grid.rows.flatMap((_, r) =>
      grid.columns.map((_, c) => ({
        row: r,
        col: c,
        pattern: 0,
        bbox: [0, 0, 1, 1] as [number, number, number, number],
      })),
    ),
    meta: {},
  };
  return { annotation, grid, notes: [] };
}

// Editor state and its pure transitions.
//
// The annotation's cell patterns and recto dot list are edited together:
// setting a pattern bit adds a dot at the bit's grid site, clearing it
// removes the dots near that site. The service validates exactly that
// consistency on save, so the two views can never drift apart.

import type { AnnotationDoc, AutoResponse, CellDoc, GridDoc } from "./types.js";

export type Direction = "up" | "down" | "left" | "right";

export interface EditorState {
  pageId: string;
  grid: GridDoc;
  patterns: number[][]; // [row][col], 6-bit masks
  recto: Array<[number, number]>;
  annotation: AnnotationDoc; // last loaded document (non-edited fields)
  selected: { row: number; col: number };
  dirty: boolean;
  revision: number;
  conflict: number | null; // server revision after a rejected save
  elapsedSeconds: number;
}

export function gridRows(grid: GridDoc): number {
  return grid.rows.length;
}

export function gridCols(grid: GridDoc): number {
  return grid.columns.length;
}

/** Dot site for pattern bit 0-5 of a cell: bits 0-2 run down the left
 * column, bits 3-5 down the right. */
export function dotSite(
  grid: GridDoc,
  row: number,
  col: number,
  bit: number,
): [number, number] {
  const jx = Math.floor(bit / 3);
  const jy = bit % 3;
  return [grid.x_lines[grid.columns[col][jx]], grid.y_lines[grid.rows[row][jy]]];
}

/** Intra-cell dot pitch, measured from the first cell column. */
export function dotPitch(grid: GridDoc): number {
  const [a, b] = grid.columns[0];
  return grid.x_lines[b] - grid.x_lines[a];
}

export function snapRadius(grid: GridDoc): number {
  return 0.35 * dotPitch(grid);
}

function patternsFromCells(grid: GridDoc, cells: CellDoc[]): number[][] {
  const out: number[][] = [];
  for (let r = 0; r < gridRows(grid); r++) {
    out.push(new Array(gridCols(grid)).fill(0));
  }
  for (const cell of cells) {
    if (cell.row < gridRows(grid) && cell.col < gridCols(grid)) {
      out[cell.row][cell.col] = cell.pattern;
    }
  }
  return out;
}

export function fromAuto(pageId: string, auto: AutoResponse): EditorState {
  if (!auto.grid) {
    throw new Error("page has no cell grid; cannot edit cell patterns");
  }
  return {
    pageId,
    grid: auto.grid,
    patterns: patternsFromCells(auto.grid, auto.annotation.cells),
    recto: auto.annotation.recto.map((p) => [p[0], p[1]]),
    annotation: auto.annotation,
    selected: { row: 0, col: 0 },
    dirty: false,
    revision: auto.annotation.revision,
    conflict: null,
    elapsedSeconds: 0,
  };
}

export function navigate(state: EditorState, direction: Direction): EditorState {
  const delta: Record<Direction, [number, number]> = {
    up: [-1, 0],
    down: [1, 0],
    left: [0, -1],
    right: [0, 1],
  };
  const [dr, dc] = delta[direction];
  const row = Math.min(Math.max(state.selected.row + dr, 0), gridRows(state.grid) - 1);
  const col = Math.min(Math.max(state.selected.col + dc, 0), gridCols(state.grid) - 1);
  return { ...state, selected: { row, col } };
}

/** Flip dot `key` (1-6) of the selected cell, keeping the dot list in sync. */
export function toggleDot(state: EditorState, key: number): EditorState {
  if (key < 1 || key > 6) return state;
  const bit = key - 1;
  const { row, col } = state.selected;
  const patterns = state.patterns.map((r) => r.slice());
  patterns[row][col] ^= 1 << bit;
  const site = dotSite(state.grid, row, col, bit);
  let recto: Array<[number, number]>;
  if (patterns[row][col] & (1 << bit)) {
    recto = [...state.recto, site];
  } else {
    const radius = snapRadius(state.grid);
    recto = state.recto.filter(
      (p) => Math.hypot(p[0] - site[0], p[1] - site[1]) > radius,
    );
  }
  return { ...state, patterns, recto, dirty: true };
}

export function markSaved(state: EditorState, revision: number): EditorState {
  return { ...state, dirty: false, revision, conflict: null };
}

/** A rejected save surfaces the server's revision; local edits stay intact. */
export function markConflict(state: EditorState, serverRevision: number): EditorState {
  return { ...state, conflict: serverRevision };
}

export function addElapsed(state: EditorState, seconds: number): EditorState {
  return { ...state, elapsedSeconds: state.elapsedSeconds + seconds };
}

/** The document a save sends: edited patterns and dots over the loaded
 * annotation, with the annotation time recorded in the metadata. */
export function toAnnotation(state: EditorState): AnnotationDoc {
  const cells: CellDoc[] = [];
  for (let r = 0; r < gridRows(state.grid); r++) {
    for (let c = 0; c < gridCols(state.grid); c++) {
      const [x0, x1] = state.grid.columns[c].map((i) => state.grid.x_lines[i]);
      const rowIdx = state.grid.rows[r];
      cells.push({
        row: r,
        col: c,
        pattern: state.patterns[r][c],
        bbox: [
          x0,
          state.grid.y_lines[rowIdx[0]],
          x1,
          state.grid.y_lines[rowIdx[2]],
        ],
      });
    }
  }
  return {
    ...state.annotation,
    revision: state.revision,
    recto: state.recto.map((p) => [round2(p[0]), round2(p[1])]),
    cells,
    meta: {
      ...state.annotation.meta,
      elapsed_seconds: Math.round(state.elapsedSeconds),
    },
  };
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Hit-test a canvas-space point against the selected-able dot sites. */
export function siteAt(
  grid: GridDoc,
  x: number,
  y: number,
): { row: number; col: number; bit: number } | null {
  const radius = snapRadius(grid);
  for (let r = 0; r < gridRows(grid); r++) {
    for (let c = 0; c < gridCols(grid); c++) {
      for (let bit = 0; bit < 6; bit++) {
        const [sx, sy] = dotSite(grid, r, c, bit);
        if (Math.hypot(sx - x, sy - y) <= radius) {
          return { row: r, col: c, bit };
        }
      }
    }
  }
  return null;
}

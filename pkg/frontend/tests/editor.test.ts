import { describe, expect, it } from "vitest";

import {
  dotSite,
  fromAuto,
  markConflict,
  markSaved,
  navigate,
  siteAt,
  toAnnotation,
  toggleDot,
  type EditorState,
} from "../src/editor.js";
import { makeAuto, makeGrid } from "./fixtures.js";

function freshState(): EditorState {
  return fromAuto("0", makeAuto());
}

describe("navigation", () => {
  it("clamps at the grid edges", () => {
    let state = freshState();
    expect(state.selected).toEqual({ row: 0, col: 0 });
    state = navigate(state, "left");
    expect(state.selected).toEqual({ row: 0, col: 0 });
    state = navigate(state, "up");
    expect(state.selected).toEqual({ row: 0, col: 0 });
  });

  it("moves one cell at a time", () => {
    let state = freshState();
    state = navigate(state, "right");
    state = navigate(state, "down");
    expect(state.selected).toEqual({ row: 1, col: 1 });
  });

  it("never changes any pattern", () => {
    let state = freshState();
    state = toggleDot(state, 3);
    const before = JSON.stringify(state.patterns);
    for (const direction of ["up", "down", "left", "right"] as const) {
      state = navigate(state, direction);
    }
    expect(JSON.stringify(state.patterns)).toBe(before);
  });
});

describe("toggleDot", () => {
  it("sets bit 0 for key 1", () => {
    const state = toggleDot(freshState(), 1);
    expect(state.patterns[0][0]).toBe(0b000001);
    expect(state.dirty).toBe(true);
  });

  it("is an involution", () => {
    const state = toggleDot(toggleDot(freshState(), 1), 1);
    expect(state.patterns[0][0]).toBe(0);
  });

  it("keys 1,2,4,5 produce pattern 27", () => {
    let state = freshState();
    for (const key of [1, 2, 4, 5]) state = toggleDot(state, key);
    expect(state.patterns[0][0]).toBe(27);
  });

  it("keeps the dot list in sync with the bits", () => {
    let state = freshState();
    state = toggleDot(state, 2);
    expect(state.recto).toHaveLength(1);
    expect(state.recto[0]).toEqual(dotSite(state.grid, 0, 0, 1));
    state = toggleDot(state, 2);
    expect(state.recto).toHaveLength(0);
  });
});

describe("save bookkeeping", () => {
  it("markSaved clears dirty and adopts the revision", () => {
    const state = markSaved(toggleDot(freshState(), 1), 4);
    expect(state.dirty).toBe(false);
    expect(state.revision).toBe(4);
    expect(state.conflict).toBeNull();
  });

  it("a conflict preserves local edits", () => {
    const edited = toggleDot(toggleDot(freshState(), 1), 5);
    const conflicted = markConflict(edited, 7);
    expect(conflicted.conflict).toBe(7);
    expect(conflicted.patterns).toEqual(edited.patterns);
    expect(conflicted.recto).toEqual(edited.recto);
    expect(conflicted.dirty).toBe(true);
  });
});

describe("toAnnotation", () => {
  it("emits every cell with its edited pattern and records elapsed time", () => {
    let state = freshState();
    state = navigate(state, "right");
    state = toggleDot(state, 6);
    state = { ...state, elapsedSeconds: 12.6 };
    const doc = toAnnotation(state);
    expect(doc.cells).toHaveLength(6);
    const cell = doc.cells.find((c) => c.row === 0 && c.col === 1)!;
    expect(cell.pattern).toBe(0b100000);
    expect(doc.meta.elapsed_seconds).toBe(13);
    expect(doc.revision).toBe(0);
    expect(doc.recto).toHaveLength(1);
  });
});

describe("keyboard reachability", () => {
  it("any pattern in any cell is reachable with arrows and digits alone", () => {
    const grid = makeGrid(3, 4);
    for (let targetRow = 0; targetRow < 3; targetRow++) {
      for (let targetCol = 0; targetCol < 4; targetCol++) {
        for (const targetPattern of [0, 1, 27, 42, 63]) {
          let state = fromAuto("0", makeAuto(grid));
          // walk to the corner, then to the target cell (clamping makes the
          // corner reachable from anywhere)
          for (let i = 0; i < 4; i++) state = navigate(state, "up");
          for (let i = 0; i < 5; i++) state = navigate(state, "left");
          for (let i = 0; i < targetRow; i++) state = navigate(state, "down");
          for (let i = 0; i < targetCol; i++) state = navigate(state, "right");
          for (let bit = 0; bit < 6; bit++) {
            const want = (targetPattern >> bit) & 1;
            const have = (state.patterns[targetRow][targetCol] >> bit) & 1;
            if (want !== have) state = toggleDot(state, bit + 1);
          }
          expect(state.patterns[targetRow][targetCol]).toBe(targetPattern);
        }
      }
    }
  });
});

describe("siteAt", () => {
  it("hits dot sites and misses the gaps", () => {
    const grid = makeGrid();
    const [x, y] = dotSite(grid, 1, 2, 4);
    expect(siteAt(grid, x + 1, y - 1)).toEqual({ row: 1, col: 2, bit: 4 });
    expect(siteAt(grid, x + 10, y + 10)).toBeNull();
  });
});

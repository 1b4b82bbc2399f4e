// @vitest-environment jsdom
//
// Scripted DOM-event coverage: the full keyboard map drives the editor via
// real KeyboardEvents dispatched on the window.

import { describe, expect, it } from "vitest";

import { fromAuto, type EditorState } from "../src/editor.js";
import { attachKeyboard } from "../src/keyboard.js";
import { makeAuto, makeGrid } from "./fixtures.js";

function harness() {
  let state: EditorState = fromAuto("0", makeAuto(makeGrid(3, 4)));
  const calls = { save: 0, reload: 0 };
  const detach = attachKeyboard(window, {
    getState: () => state,
    setState: (next) => {
      state = next;
    },
    save: () => {
      calls.save += 1;
    },
    reload: () => {
      calls.reload += 1;
    },
  });
  const press = (key: string) =>
    window.dispatchEvent(new KeyboardEvent("keydown", { key, cancelable: true }));
  return {
    press,
    calls,
    detach,
    get state() {
      return state;
    },
  };
}

describe("keyboard events", () => {
  it("arrows navigate with clamping", () => {
    const h = harness();
    h.press("ArrowLeft");
    expect(h.state.selected).toEqual({ row: 0, col: 0 });
    h.press("ArrowRight");
    h.press("ArrowDown");
    expect(h.state.selected).toEqual({ row: 1, col: 1 });
    h.detach();
  });

  it("digits toggle dots of the selected cell", () => {
    const h = harness();
    for (const key of ["1", "2", "4", "5"]) h.press(key);
    expect(h.state.patterns[0][0]).toBe(27);
    h.press("1");
    expect(h.state.patterns[0][0]).toBe(26);
    h.detach();
  });

  it("s saves and g reloads", () => {
    const h = harness();
    h.press("s");
    h.press("S");
    h.press("g");
    expect(h.calls).toEqual({ save: 2, reload: 1 });
    h.detach();
  });

  it("unbound keys do nothing", () => {
    const h = harness();
    const before = JSON.stringify(h.state);
    h.press("x");
    h.press("7");
    h.press("Enter");
    expect(JSON.stringify(h.state)).toBe(before);
    expect(h.calls).toEqual({ save: 0, reload: 0 });
    h.detach();
  });

  it("every pattern is reachable via DOM key events alone", () => {
    const h = harness();
    const target = { row: 2, col: 3, pattern: 45 };
    for (let i = 0; i < 5; i++) h.press("ArrowUp");
    for (let i = 0; i < 6; i++) h.press("ArrowLeft");
    for (let i = 0; i < target.row; i++) h.press("ArrowDown");
    for (let i = 0; i < target.col; i++) h.press("ArrowRight");
    for (let bit = 0; bit < 6; bit++) {
      if ((target.pattern >> bit) & 1) h.press(String(bit + 1));
    }
    expect(h.state.patterns[target.row][target.col]).toBe(target.pattern);
    h.detach();
  });

  it("edits survive navigation and window resize", () => {
    const h = harness();
    for (const key of ["1", "3"]) h.press(key);
    const edited = JSON.stringify(h.state.patterns);
    h.press("ArrowDown");
    h.press("ArrowRight");
    window.dispatchEvent(new Event("resize"));
    expect(JSON.stringify(h.state.patterns)).toBe(edited);
    expect(h.state.dirty).toBe(true);
    h.detach();
  });
});

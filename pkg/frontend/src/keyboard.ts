// Keyboard map: arrows move the cell selection, digits 1-6 toggle dots,
// "s" saves, "g" re-runs auto-detection.

import { navigate, toggleDot, type Direction, type EditorState } from "./editor.js";

export type Action =
  | { kind: "state"; apply: (state: EditorState) => EditorState }
  | { kind: "save" }
  | { kind: "reload" };

const ARROWS: Record<string, Direction> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

export function actionForKey(key: string): Action | null {
  if (key in ARROWS) {
    const direction = ARROWS[key];
    return { kind: "state", apply: (s) => navigate(s, direction) };
  }
  if (key >= "1" && key <= "6") {
    const digit = Number(key);
    return { kind: "state", apply: (s) => toggleDot(s, digit) };
  }
  if (key === "s" || key === "S") return { kind: "save" };
  if (key === "g" || key === "G") return { kind: "reload" };
  return null;
}

export interface KeyboardHooks {
  getState: () => EditorState | null;
  setState: (state: EditorState) => void;
  save: () => void;
  reload: () => void;
}

export function attachKeyboard(target: EventTarget, hooks: KeyboardHooks): () => void {
  const handler = (event: Event) => {
    const key = (event as KeyboardEvent).key;
    const action = actionForKey(key);
    if (!action) return;
    event.preventDefault();
    if (action.kind === "save") {
      hooks.save();
      return;
    }
    if (action.kind === "reload") {
      hooks.reload();
      return;
    }
    const state = hooks.getState();
    if (state) hooks.setState(action.apply(state));
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}

// Editor wiring: page selection, canvas, keyboard, timer, save/conflict UI.

import { ApiClient } from "./api.js";
import {
  addElapsed,
  fromAuto,
  markConflict,
  markSaved,
  siteAt,
  toAnnotation,
  toggleDot,
  type EditorState,
} from "./editor.js";
import { attachKeyboard } from "./keyboard.js";
import { drawOverlay, scrollSelectionIntoView } from "./overlay.js";
import { FocusStopwatch } from "./timer.js";

const api = new ApiClient("");
const stopwatch = new FocusStopwatch();

let state: EditorState | null = null;
let pageImage: HTMLImageElement | null = null;

const pageSelect = document.getElementById("page-select") as HTMLSelectElement;
const canvas = document.getElementById("page-canvas") as HTMLCanvasElement;
const viewport = document.getElementById("viewport") as HTMLDivElement;
const statusBar = document.getElementById("status") as HTMLDivElement;

function setStatus(text: string, isError = false): void {
  statusBar.textContent = text;
  statusBar.className = isError ? "error" : "";
}

function render(): void {
  if (!state) return;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  drawOverlay(ctx, pageImage, state);
  scrollSelectionIntoView(viewport, state);
  const flags = [
    state.dirty ? "unsaved edits" : "saved",
    state.conflict !== null
      ? `CONFLICT: server is at revision ${state.conflict}; press g to reload or s to retry`
      : "",
  ]
    .filter(Boolean)
    .join(" | ");
  setStatus(
    `page ${state.pageId} | cell (${state.selected.row}, ${state.selected.col}) | ` +
      `revision ${state.revision} | ${flags}`,
    state.conflict !== null,
  );
}

function setState(next: EditorState): void {
  state = next;
  render();
}

async function loadPage(pageId: string): Promise<void> {
  setStatus(`loading page ${pageId}...`);
  try {
    const auto = await api.fetchAuto(pageId);
    const saved = await api.fetchAnnotation(pageId);
    let next = fromAuto(pageId, auto);
    if (saved) {
      // Prefer the saved cells/dots but keep the freshly detected grid.
      next = {
        ...next,
        annotation: saved,
        revision: saved.revision,
        recto: saved.recto.map((p) => [p[0], p[1]] as [number, number]),
      };
      for (const cell of saved.cells) {
        if (cell.row < next.patterns.length && cell.col < next.patterns[0].length) {
          next.patterns[cell.row][cell.col] = cell.pattern;
        }
      }
    }
    pageImage = new Image();
    pageImage.src = api.imageUrl(pageId);
    await pageImage.decode();
    canvas.width = pageImage.naturalWidth;
    canvas.height = pageImage.naturalHeight;
    setState(next);
  } catch (err) {
    setStatus(`failed to load page ${pageId}: ${err}`, true);
  }
}

async function save(): Promise<void> {
  if (!state) return;
  const withTime = addElapsed(state, stopwatch.take());
  const result = await api.save(withTime.pageId, toAnnotation(withTime));
  if (result.ok) {
    setState(markSaved(withTime, result.revision));
  } else if ("conflict" in result) {
    setState(markConflict(withTime, result.conflict));
  } else {
    setState(withTime);
    setStatus(`save failed: ${result.error}; edits kept`, true);
  }
}

async function retryWithServerRevision(): Promise<void> {
  // After a conflict the user may force-retry: adopt the server revision
  // and save the local edits over it.
  if (!state || state.conflict === null) return save();
  setState({ ...state, revision: state.conflict, conflict: null });
  await save();
}

async function start(): Promise<void> {
  stopwatch.attach(window);
  const pages = await api.listPages();
  for (const page of pages) {
    const option = document.createElement("option");
    option.value = page.id;
    option.textContent = `${page.id}: ${page.image} (${page.book})`;
    pageSelect.appendChild(option);
  }
  pageSelect.addEventListener("change", () => void loadPage(pageSelect.value));

  attachKeyboard(window, {
    getState: () => state,
    setState,
    save: () => void retryWithServerRevision(),
    reload: () => state && void loadPage(state.pageId),
  });

  canvas.addEventListener("mousedown", (event) => {
    if (!state) return;
    const rect = canvas.getBoundingClientRect();
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    const hit = siteAt(state.grid, x, y);
    if (hit) {
      const moved = { ...state, selected: { row: hit.row, col: hit.col } };
      setState(toggleDot(moved, hit.bit + 1));
    }
  });

  window.addEventListener("resize", render);

  if (pages.length) {
    pageSelect.value = pages[0].id;
    await loadPage(pages[0].id);
  } else {
    setStatus("service reports no pages", true);
  }
}

void start();

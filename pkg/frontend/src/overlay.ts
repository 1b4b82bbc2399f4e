// Canvas rendering of the page image, cell grid, and dot patterns.
// Drawing is a pure view of the editor state; it never mutates it.

import { dotPitch, dotSite, gridCols, gridRows, type EditorState } from "./editor.js";

const GRID_COLOR = "rgba(70, 140, 220, 0.45)";
const SELECT_COLOR = "rgba(240, 150, 30, 0.9)";
const DOT_ON = "rgba(220, 50, 50, 0.85)";
const DOT_OFF = "rgba(90, 90, 90, 0.5)";

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  image: CanvasImageSource | null,
  state: EditorState,
): void {
  const { grid } = state;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (image) {
    ctx.drawImage(image, 0, 0);
  }

  ctx.strokeStyle = GRID_COLOR;
  ctx.lineWidth = 1;
  const pad = dotPitch(grid) / 2;
  for (let r = 0; r < gridRows(grid); r++) {
    for (let c = 0; c < gridCols(grid); c++) {
      const x0 = grid.x_lines[grid.columns[c][0]] - pad;
      const x1 = grid.x_lines[grid.columns[c][1]] + pad;
      const y0 = grid.y_lines[grid.rows[r][0]] - pad;
      const y1 = grid.y_lines[grid.rows[r][2]] + pad;
      ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
    }
  }

  const radius = Math.max(3, dotPitch(grid) * 0.22);
  for (let r = 0; r < gridRows(grid); r++) {
    for (let c = 0; c < gridCols(grid); c++) {
      const pattern = state.patterns[r][c];
      for (let bit = 0; bit < 6; bit++) {
        const [x, y] = dotSite(grid, r, c, bit);
        ctx.beginPath();
        ctx.arc(x, y, radius, 0, Math.PI * 2);
        if (pattern & (1 << bit)) {
          ctx.fillStyle = DOT_ON;
          ctx.fill();
        } else {
          ctx.strokeStyle = DOT_OFF;
          ctx.stroke();
        }
      }
    }
  }

  const { row, col } = state.selected;
  const x0 = grid.x_lines[grid.columns[col][0]] - pad;
  const x1 = grid.x_lines[grid.columns[col][1]] + pad;
  const y0 = grid.y_lines[grid.rows[row][0]] - pad;
  const y1 = grid.y_lines[grid.rows[row][2]] + pad;
  ctx.strokeStyle = SELECT_COLOR;
  ctx.lineWidth = 2;
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
}

/** Keep the selected cell visible inside a scrolling container. */
export function scrollSelectionIntoView(container: HTMLElement, state: EditorState): void {
  const { grid, selected } = state;
  const x = grid.x_lines[grid.columns[selected.col][0]];
  const y = grid.y_lines[grid.rows[selected.row][0]];
  const margin = 3 * dotPitch(grid);
  if (x - margin < container.scrollLeft) container.scrollLeft = Math.max(0, x - margin);
  if (x + margin > container.scrollLeft + container.clientWidth) {
    container.scrollLeft = x + margin - container.clientWidth;
  }
  if (y - margin < container.scrollTop) container.scrollTop = Math.max(0, y - margin);
  if (y + margin > container.scrollTop + container.clientHeight) {
    container.scrollTop = y + margin - container.clientHeight;
  }
}

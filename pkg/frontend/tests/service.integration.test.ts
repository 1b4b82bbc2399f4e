// End-to-end contract against the real Python annotation service:
// load auto-annotation, edit one cell to pattern 27 via the editor state,
// save, verify the on-disk file, and exercise the stale-revision conflict.
//
// Requires the braillekit package to be installed (pip install -e ..).

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { fromAuto, markConflict, toAnnotation, toggleDot } from "../src/editor.js";
import type { AnnotationDoc } from "../src/types.js";

const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 8870 + (process.pid % 100);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let service: ChildProcess | null = null;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/pages`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("annotation service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "braillekit-ui-test-"));
  const synth = spawnSync(
    PYTHON,
    [
      "-m", "braillekit.cli", "synth",
      "--output", join(workDir, "pages"),
      "--pages", "1", "--rows", "3", "--cols", "5",
      "--noise", "4", "--skew-max", "0", "--seed", "2",
    ],
    { encoding: "utf-8" },
  );
  expect(synth.status, synth.stderr).toBe(0);
  service = spawn(
    PYTHON,
    [
      "-m", "braillekit.cli", "annotate",
      "--input", join(workDir, "pages", "manifest.csv"),
      "--listen", `127.0.0.1:${PORT}`,
    ],
    { stdio: "ignore" },
  );
  await waitForService();
}, 60_000);

afterAll(() => {
  service?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("editor against the live service", () => {
  const api = new ApiClient(BASE);

  it("load, edit to pattern 27, save; the file holds the pattern", async () => {
    const auto = await api.fetchAuto("0");
    let state = fromAuto("0", auto);

    // clear whatever detection put into cell (0, 0), then set dots 1,2,4,5
    for (let bit = 0; bit < 6; bit++) {
      if (state.patterns[0][0] & (1 << bit)) state = toggleDot(state, bit + 1);
    }
    for (const key of [1, 2, 4, 5]) state = toggleDot(state, key);
    expect(state.patterns[0][0]).toBe(27);

    const result = await api.save("0", toAnnotation(state));
    expect(result.ok).toBe(true);
    if (result.ok) expect(result.revision).toBe(1);

    const saved = JSON.parse(
      readFileSync(join(workDir, "pages", "p000_front.json"), "utf-8"),
    ) as AnnotationDoc;
    const cell = saved.cells.find((c) => c.row === 0 && c.col === 0)!;
    expect(cell.pattern).toBe(27);
    expect(saved.revision).toBe(1);
  }, 60_000);

  it("stale-revision save conflicts and preserves local edits", async () => {
    const auto = await api.fetchAuto("0");
    expect(auto.annotation.revision).toBe(1);
    const saved = (await api.fetchAnnotation("0"))!;
    let stale = fromAuto("0", auto);
    // what the editor does on load: saved cells and dots over the fresh grid
    for (const cell of saved.cells) {
      stale.patterns[cell.row][cell.col] = cell.pattern;
    }
    stale = {
      ...stale,
      recto: saved.recto.map((p) => [p[0], p[1]] as [number, number]),
    };
    stale = { ...stale, revision: 0 }; // pretend we loaded before the save
    stale = toggleDot(stale, 3);
    expect(stale.patterns[0][0]).toBe(27 ^ 0b000100);
    const edited = JSON.parse(JSON.stringify(stale.patterns));

    const result = await api.save("0", toAnnotation(stale));
    expect(result.ok).toBe(false);
    if (!result.ok && "conflict" in result) {
      expect(result.conflict).toBe(1);
      stale = markConflict(stale, result.conflict);
    } else {
      throw new Error("expected a conflict result");
    }
    expect(stale.patterns).toEqual(edited);
    expect(stale.conflict).toBe(1);

    // adopting the server revision makes the retry succeed
    stale = { ...stale, revision: stale.conflict!, conflict: null };
    const retry = await api.save("0", toAnnotation(stale));
    expect(retry.ok).toBe(true);
    if (retry.ok) expect(retry.revision).toBe(2);
  }, 60_000);

  it("saved annotations come back on reload", async () => {
    const saved = await api.fetchAnnotation("0");
    expect(saved).not.toBeNull();
    expect(saved!.revision).toBe(2);
    const cell = saved!.cells.find((c) => c.row === 0 && c.col === 0)!;
    // bit 3 was toggled on top of pattern 27 by the retry above
    expect(cell.pattern).toBe(27 ^ 0b000100);
  }, 60_000);
});

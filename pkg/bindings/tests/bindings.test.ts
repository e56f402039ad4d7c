import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  alignScores,
  CliError,
  iouMatrix,
  nms,
  ValidationError,
  VERSION,
  version,
  writeTensor,
} from "../src/index.js";

// fixture boxes come straight from the core geometry test suite
const AXIS_A = [5, 2, 10, 4, 0];
const AXIS_B = [10, 2, 10, 4, 0];

function runCliRaw(args: string[]): string {
  const raw = process.env.ROTBOX_CLI ?? "rotbox";
  const [cmd, ...prefix] = raw.split(" ").filter((p) => p.length > 0);
  return execFileSync(cmd, [...prefix, ...args], { encoding: "utf8" });
}

describe("version", () => {
  it("matches the core version string", () => {
    expect(version()).toBe(VERSION);
  });
});

describe("iouMatrix", () => {
  it("is 1 for an identical pair", () => {
    const m = iouMatrix([AXIS_A], [AXIS_A]);
    expect(m).toEqual([[1.0]]);
  });

  it("reproduces the 1/3 side-by-side fixture", () => {
    const m = iouMatrix([AXIS_A], [AXIS_B]);
    expect(m[0][0]).toBeCloseTo(1 / 3, 12);
  });

  it("returns a 0xM matrix for empty input", () => {
    expect(iouMatrix([], [AXIS_A])).toEqual([]);
  });

  it("is bit-identical to a direct CLI invocation", () => {
    const boxes = [
      [12.25, 8.5, 30.125, 11.75, 0.3],
      [20.0, 10.0, 25.0, 14.0, -0.41],
      [90.0, 90.0, 8.0, 6.0, Math.PI / 4],
    ];
    const viaBinding = iouMatrix(boxes, boxes);
    const dir = mkdtempSync(join(tmpdir(), "rotbox-test-"));
    try {
      const f = join(dir, "boxes.json");
      writeFileSync(f, JSON.stringify(boxes));
      const direct = JSON.parse(runCliRaw(["iou", "--boxes-a", f, "--boxes-b", f]));
      expect(JSON.stringify(viaBinding)).toBe(JSON.stringify(direct));
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });

  it("rejects malformed rows before reaching the core", () => {
    expect(() => iouMatrix([[1, 2, 3, 4]], [AXIS_A])).toThrow(ValidationError);
    expect(() => iouMatrix([[1, 2, -3, 4, 0]], [AXIS_A])).toThrow(ValidationError);
    expect(() => iouMatrix([[1, 2, 3, 4, 3.0]], [AXIS_A])).toThrow(ValidationError);
  });
});

describe("nms", () => {
  it("keeps the higher-scored duplicate", () => {
    const box = [10, 10, 8, 4, 0];
    expect(nms([box, box], [0.8, 0.9], 0.1)).toEqual([1]);
  });

  it("keeps the ends of the overlap chain", () => {
    // A-B and B-C at IoU 0.5, A-C touching: survivors are A and C
    const chain = [
      [0, 0, 10, 4, 0],
      [5, 0, 20, 4, 0],
      [10, 0, 10, 4, 0],
    ];
    expect(nms(chain, [0.9, 0.8, 0.7], 0.3)).toEqual([0, 2]);
  });

  it("handles empty input", () => {
    expect(nms([], [], 0.5)).toEqual([]);
  });

  it("is bit-identical to a direct CLI invocation", () => {
    const boxes: number[][] = [];
    const scores: number[] = [];
    for (let i = 0; i < 40; i++) {
      boxes.push([
        (i * 37) % 120, (i * 53) % 120,
        8 + ((i * 7) % 24), 6 + ((i * 5) % 18),
        ((i % 15) - 7) * 0.1,
      ]);
      scores.push(((i * 71) % 97) / 97);
    }
    const viaBinding = nms(boxes, scores, 0.25);
    const dir = mkdtempSync(join(tmpdir(), "rotbox-test-"));
    try {
      const fb = join(dir, "boxes.json");
      const fs = join(dir, "scores.json");
      writeFileSync(fb, JSON.stringify(boxes));
      writeFileSync(fs, JSON.stringify(scores));
      const direct = JSON.parse(runCliRaw([
        "nms", "--boxes", fb, "--scores", fs, "--iou-thresh", "0.25",
      ]));
      expect(viaBinding).toEqual(direct);
      expect(viaBinding.length).toBeGreaterThan(0);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });

  it("validates score length", () => {
    expect(() => nms([[1, 1, 2, 2, 0]], [0.5, 0.6], 0.3)).toThrow(ValidationError);
  });
});

describe("alignScores", () => {
  const H = 32;
  const W = 32;

  it("passes a constant map through exactly", () => {
    const value = 0.4375;
    const grid = Array.from({ length: H }, () => Array(W).fill(value));
    const out = alignScores([[64, 64, 30, 14, 0.2]], grid, 4, "diamond9");
    expect(out).toEqual([value]);
  });

  it("recovers center values on an affine field", () => {
    // f(x, y) = ax + by + c sampled at cell centers (stride 4)
    const a = 0.002;
    const b = 0.003;
    const c = 0.05;
    const grid = Array.from({ length: H }, (_, y) =>
      Array.from({ length: W }, (_, x) => a * (x + 0.5) * 4 + b * (y + 0.5) * 4 + c),
    );
    const boxes = [
      [64, 64, 30, 14, 0.2],
      [50, 80, 22, 18, -0.35],
    ];
    const out = alignScores(boxes, grid, 4, "rect9");
    for (let i = 0; i < boxes.length; i++) {
      const expected = a * boxes[i][0] + b * boxes[i][1] + c;
      expect(Math.abs(out[i] - expected)).toBeLessThan(1e-6);
    }
  });

  it("rejects unknown pattern names", () => {
    const grid = [[0.5]];
    expect(() => alignScores([[2, 2, 1, 1, 0]], grid, 4, "hexagon7")).toThrow(
      ValidationError,
    );
  });

  it("is bit-identical to a direct CLI invocation", () => {
    const grid = Array.from({ length: H }, (_, y) =>
      Array.from({ length: W }, (_, x) => ((x * 37 + y * 11) % 101) / 101),
    );
    const boxes = [[60.5, 70.25, 28, 16, 0.1]];
    const viaBinding = alignScores(boxes, grid, 4, "diamond13");
    const dir = mkdtempSync(join(tmpdir(), "rotbox-test-"));
    try {
      const fb = join(dir, "boxes.json");
      const fm = join(dir, "map.rbk");
      writeFileSync(fb, JSON.stringify(boxes));
      writeTensor(fm, grid);
      const direct = JSON.parse(runCliRaw([
        "align", "--boxes", fb, "--map", fm, "--stride", "4",
        "--pattern", "diamond13",
      ]));
      expect(JSON.stringify(viaBinding)).toBe(JSON.stringify(direct));
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  });
});

describe("error mapping", () => {
  it("maps spawn failures to CliError", () => {
    const old = process.env.ROTBOX_CLI;
    process.env.ROTBOX_CLI = "definitely-not-a-command-xyz";
    try {
      expect(() => version()).toThrow(CliError);
    } finally {
      if (old === undefined) {
        delete process.env.ROTBOX_CLI;
      } else {
        process.env.ROTBOX_CLI = old;
      }
    }
  });

  it("rejects non-finite scores locally", () => {
    expect(() => nms([[1, 1, 2, 2, 0]], [Number.NaN], 0.3)).toThrow(ValidationError);
  });
});

/**
 * TypeScript bindings for the rotbox oriented-box toolkit.
 *
 * The heavy lifting stays in the Python core; these functions validate
 * their inputs, hand the work to the `rotbox` CLI through its documented
 * file formats, and parse the results back. Numbers cross the boundary as
 * full-precision JSON, and both runtimes use IEEE-754 doubles, so values
 * returned here are bit-identical to what the core computed.
 *
 * Set ROTBOX_CLI to override the command used to invoke the core
 * (e.g. "python3 -m rotbox.cli").
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const VERSION = "0.1.0";

const QUARTER_PI = Math.PI / 4;

export const PATTERN_NAMES = ["rect9", "diamond5", "diamond9", "diamond13"] as const;
export type PatternName = (typeof PATTERN_NAMES)[number];

/** One box row: [cx, cy, w, h, theta] with theta in radians, (-pi/4, pi/4]. */
export type BoxRow = readonly [number, number, number, number, number];

/** Raised when inputs fail validation before reaching the core. */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

/** Raised when the core CLI rejects the request or cannot be spawned. */
export class CliError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CliError";
  }
}

export function validateBoxes(boxes: ReadonlyArray<BoxRow | number[]>): void {
  boxes.forEach((row, i) => {
    if (!Array.isArray(row) || row.length !== 5) {
      throw new ValidationError(`box row ${i} must hold exactly 5 numbers`);
    }
    if (!row.every((v) => typeof v === "number" && Number.isFinite(v))) {
      throw new ValidationError(`box row ${i} holds non-finite values`);
    }
    const [, , w, h, theta] = row;
    if (w <= 0 || h <= 0) {
      throw new ValidationError(`box row ${i} has non-positive sides`);
    }
    if (!(theta > -QUARTER_PI && theta <= QUARTER_PI)) {
      throw new ValidationError(
        `box row ${i} angle ${theta} outside (-pi/4, pi/4]`,
      );
    }
  });
}

function cliCommand(): string[] {
  const raw = process.env.ROTBOX_CLI ?? "rotbox";
  return raw.split(" ").filter((part) => part.length > 0);
}

/** Invoke the core CLI and return its stdout; non-zero exit raises CliError. */
export function runCli(args: string[]): string {
  const [cmd, ...prefix] = cliCommand();
  try {
    return execFileSync(cmd, [...prefix, ...args], { encoding: "utf8" });
  } catch (err) {
    const anyErr = err as { status?: number; stderr?: string; message?: string };
    const detail = (anyErr.stderr ?? anyErr.message ?? "").toString().trim();
    throw new CliError(`rotbox CLI failed (exit ${anyErr.status ?? "?"}): ${detail}`);
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "rotbox-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Write a 2-D score grid into the core's binary tensor container:
 * magic "RBK1", uint32 ndim, uint32 dims, float32 row-major payload,
 * all little-endian.
 */
export function writeTensor(path: string, values: number[][]): void {
  const h = values.length;
  const w = h > 0 ? values[0].length : 0;
  if (values.some((row) => row.length !== w)) {
    throw new ValidationError("score map rows must share one width");
  }
  const header = Buffer.alloc(4 + 4 + 8);
  header.write("RBK1", 0, "ascii");
  header.writeUInt32LE(2, 4);
  header.writeUInt32LE(h, 8);
  header.writeUInt32LE(w, 12);
  const payload = Buffer.alloc(4 * h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const v = values[y][x];
      if (!Number.isFinite(v)) {
        throw new ValidationError(`non-finite score at (${y}, ${x})`);
      }
      payload.writeFloatLE(v, 4 * (y * w + x));
    }
  }
  writeFileSync(path, Buffer.concat([header, payload]));
}

function writeJson(dir: string, name: string, doc: unknown): string {
  const path = join(dir, name);
  writeFileSync(path, JSON.stringify(doc));
  return path;
}

/** Pairwise rotated IoU matrix: entry (i, j) = IoU(a[i], b[j]). */
export function iouMatrix(
  a: ReadonlyArray<BoxRow | number[]>,
  b: ReadonlyArray<BoxRow | number[]>,
): number[][] {
  validateBoxes(a);
  validateBoxes(b);
  return withTempDir((dir) => {
    const fa = writeJson(dir, "a.json", a);
    const fb = writeJson(dir, "b.json", b);
    return JSON.parse(runCli(["iou", "--boxes-a", fa, "--boxes-b", fb]));
  });
}

/**
 * Greedy rotated NMS; returns the indices of surviving boxes in
 * score-descending order (ties break on the lower index).
 */
export function nms(
  boxes: ReadonlyArray<BoxRow | number[]>,
  scores: ReadonlyArray<number>,
  iouThresh: number,
): number[] {
  validateBoxes(boxes);
  if (scores.length !== boxes.length) {
    throw new ValidationError("scores length must match box count");
  }
  if (!scores.every((s) => Number.isFinite(s))) {
    throw new ValidationError("scores must be finite");
  }
  if (!(iouThresh >= 0 && iouThresh <= 1)) {
    throw new ValidationError(`iou threshold ${iouThresh} outside [0, 1]`);
  }
  return withTempDir((dir) => {
    const fb = writeJson(dir, "boxes.json", boxes);
    const fs = writeJson(dir, "scores.json", scores);
    return JSON.parse(runCli([
      "nms", "--boxes", fb, "--scores", fs, "--iou-thresh", String(iouThresh),
    ]));
  });
}

/**
 * Locality-aware score alignment: for each box, the mean of bilinear
 * score-map samples at the named pattern's points inside the box.
 * `scoreMap` is a (H x W) grid of post-sigmoid probabilities at the given
 * stride (one of 4, 8, 16).
 */
export function alignScores(
  boxes: ReadonlyArray<BoxRow | number[]>,
  scoreMap: number[][],
  stride: number,
  pattern: string,
): number[] {
  validateBoxes(boxes);
  if (!(PATTERN_NAMES as readonly string[]).includes(pattern)) {
    throw new ValidationError(
      `unknown pattern ${JSON.stringify(pattern)}; expected one of ${PATTERN_NAMES.join(", ")}`,
    );
  }
  if (![4, 8, 16].includes(stride)) {
    throw new ValidationError(`stride ${stride} must be one of 4, 8, 16`);
  }
  return withTempDir((dir) => {
    const fb = writeJson(dir, "boxes.json", boxes);
    const fm = join(dir, "map.rbk");
    writeTensor(fm, scoreMap);
    return JSON.parse(runCli([
      "align", "--boxes", fb, "--map", fm,
      "--stride", String(stride), "--pattern", pattern,
    ]));
  });
}

/** Version string of the core CLI; must match this package's VERSION. */
export function version(): string {
  return runCli(["--version"]).trim();
}

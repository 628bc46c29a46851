/**
 * Scripted rating session against the real Python service.
 *
 * Covers the full protocol round trip: familiarization plus two passes over
 * five stimuli yields exactly ten exported rows labeled by pass, a rating of
 * 6 is rejected with HTTP 422 and never persisted, and a mid-pass reload
 * resumes at the correct stimulus.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, StimulusRef } from "../src/api.js";
import { SessionController } from "../src/session.js";

const FIXTURE_SCRIPT = `
import sys
import numpy as np
from pathlib import Path
from fluencykit.audio import write_wav
from fluencykit.manifest import ManifestRow, write_manifest
from fluencykit.synthetic import random_plan, render_plan

out = Path(sys.argv[1])
(out / "wav").mkdir(parents=True, exist_ok=True)

def make(prefix, count, start_seed):
    rows = []
    for i in range(count):
        rng = np.random.default_rng(start_seed + i)
        plan = random_plan(rng, n_bursts=(3, 5))
        wav = out / "wav" / f"{prefix}{i}.wav"
        write_wav(render_plan(plan, rng), wav)
        rows.append(ManifestRow(f"{prefix}{i}", f"spk{i}", "control", "sent0",
                                len(plan.bursts), str(wav)))
    return rows

write_manifest(out / "manifest.csv", make("stim", 5, 100))
write_manifest(out / "practice.csv", make("prac", 2, 900))
print("fixture ready")
`;

let tmp: string;
let server: ChildProcess | undefined;
let baseUrl: string;
let api: ApiClient;

async function playThrough(ctl: SessionController, rating: number): Promise<void> {
  // headless stand-in for the audio element's "ended" event
  ctl.notePlaybackComplete();
  ctl.selectRating(rating);
  await ctl.submit();
}

async function exportRows(): Promise<string[][]> {
  const text = await (await fetch(api.exportUrl())).text();
  return text
    .trim()
    .split("\n")
    .slice(1)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

beforeAll(async () => {
  tmp = mkdtempSync(join(tmpdir(), "rater-ui-"));
  execFileSync("python3", ["-c", FIXTURE_SCRIPT, tmp], { stdio: "pipe" });

  server = spawn("python3", [
    "-m", "fluencykit.cli", "rate-serve",
    "--manifest", join(tmp, "manifest.csv"),
    "--practice-manifest", join(tmp, "practice.csv"),
    "--out-ratings", join(tmp, "ratings.csv"),
    "--port", "0",
    "--seed", "21",
  ]);

  baseUrl = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 20_000);
    let buffer = "";
    server!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[^/ ]+)\//);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server!.stderr!.on("data", (chunk: Buffer) => {
      process.stderr.write(chunk);
    });
    server!.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
  api = new ApiClient(baseUrl);
}, 60_000);

afterAll(() => {
  server?.kill();
  if (tmp) rmSync(tmp, { recursive: true, force: true });
});

describe("scripted rating session", () => {
  it("completes practice plus two passes and exports exactly 10 labeled rows", async () => {
    const ctl = new SessionController(api, "rater-a");
    await ctl.start();
    expect(ctl.snapshot().phase).toBe("practice");
    expect(ctl.snapshot().total).toBe(2);

    let guard = 0;
    while (ctl.snapshot().phase !== "done") {
      await playThrough(ctl, (guard % 5) + 1);
      expect(ctl.snapshot().error).toBeNull();
      if (++guard > 30) throw new Error("session did not terminate");
    }
    expect(guard).toBe(2 + 5 + 5);

    const rows = await exportRows();
    expect(rows).toHaveLength(10);
    for (const [raterId, stimulusId, pass, rating] of rows) {
      expect(raterId).toBe("rater-a");
      expect(stimulusId).toMatch(/^stim[0-4]$/);
      expect(["1", "2"]).toContain(pass);
      expect(Number(rating)).toBeGreaterThanOrEqual(1);
      expect(Number(rating)).toBeLessThanOrEqual(5);
    }
    expect(rows.filter((r) => r[2] === "1")).toHaveLength(5);
    expect(rows.filter((r) => r[2] === "2")).toHaveLength(5);
    // no practice stimulus ever reaches the export
    expect(rows.some((r) => r[1].startsWith("prac"))).toBe(false);
  });

  it("rejects a rating of 6 with HTTP 422 and persists nothing for it", async () => {
    const before = (await exportRows()).length;
    const order = await api.getStimuli("rater-b", 1);
    const response = await fetch(`${baseUrl}/api/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        rater_id: "rater-b",
        stimulus_id: order[0].stimulus_id,
        pass: 1,
        rating: 6,
      }),
    });
    expect(response.status).toBe(422);
    expect((await exportRows()).length).toBe(before);
  });

  it("resumes a mid-pass reload at the correct stimulus", async () => {
    const ctl = new SessionController(api, "rater-c");
    await ctl.start();
    await playThrough(ctl, 4); // practice 1
    await playThrough(ctl, 4); // practice 2
    expect(ctl.snapshot().phase).toBe("pass1");
    await playThrough(ctl, 2);
    await playThrough(ctl, 5);

    // as after a browser reload: a brand-new controller for the same rater
    const reloaded = new SessionController(api, "rater-c");
    await reloaded.start();
    const snap = reloaded.snapshot();
    expect(snap.phase).toBe("pass1");
    expect(snap.index).toBe(2);
    const order = await api.getStimuli("rater-c", 1);
    expect(snap.stimulus?.stimulus_id).toBe(order[2].stimulus_id);
  });

  it("keeps the rater blind: stimuli expose no speaker or group fields", async () => {
    const order = await api.getStimuli("rater-d", 1);
    expect(order.length).toBe(5);
    for (const stimulus of order as Array<StimulusRef & Record<string, unknown>>) {
      expect(Object.keys(stimulus).sort()).toEqual(["audio_url", "stimulus_id"]);
    }
  });

  it("serves playable audio for scheduled stimuli", async () => {
    const order = await api.getStimuli("rater-d", 1);
    const response = await fetch(`${baseUrl}${order[0].audio_url}`);
    expect(response.status).toBe(200);
    expect(response.headers.get("content-type")).toBe("audio/wav");
    const bytes = new Uint8Array(await response.arrayBuffer());
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("RIFF");
  });
});

/**
 * End-to-end conformance against the real session server.
 *
 * Spawns the Python server on an ephemeral port, drives it through the
 * SessionClient exactly as the browser UI would, and checks that the UI-side
 * state converges to the server's snapshots field-for-field.
 */
import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { SessionClient, wrapWebSocket } from "../src/client.js";
import { ChunkScheduler, type AudioSink } from "../src/audio.js";
import { emitEvent, type WidgetEvent } from "../src/controls.js";
import { sessionStateSchema } from "../src/protocol.js";

const repoRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "../..");

let server: ChildProcess;
let url = "";

class NullSink implements AudioSink {
  currentTime() {
    return 0;
  }
  play() {}
}

function connect(): Promise<SessionClient> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.once("error", reject);
    const client = new SessionClient(wrapWebSocket(ws as never), {
      scheduler: new ChunkScheduler(new NullSink(), 44100),
      onBadFrame: (err) => reject(err),
    });
    const unsubscribe = client.store.subscribe((store) => {
      if (store.state) {
        unsubscribe();
        resolve(client);
      }
    });
  });
}

/** Wait until the latest snapshot satisfies `predicate`. */
function untilState(client: SessionClient, predicate: (s: SessionClient["store"]) => boolean): Promise<void> {
  return new Promise((resolve, reject) => {
    if (predicate(client.store)) return resolve();
    const timer = setTimeout(() => reject(new Error("state condition timed out")), 10000);
    const unsubscribe = client.store.subscribe((store) => {
      if (predicate(store)) {
        clearTimeout(timer);
        unsubscribe();
        resolve();
      }
    });
  });
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "sonify.server", "--config", "fixtures/airquality_fm.json", "--port", "0"],
    {
      cwd: repoRoot,
      env: { ...process.env, PYTHONPATH: path.join(repoRoot, "src") },
      stdio: ["ignore", "pipe", "inherit"],
    },
  );
  url = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
    let out = "";
    server.stdout!.on("data", (data: Buffer) => {
      out += data.toString();
      const match = out.match(/listening on (ws:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    server.once("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("live server conformance", () => {
  it("receives a schema-valid snapshot with the four pollutant tracks", async () => {
    const client = await connect();
    try {
      const state = client.store.state!;
      expect(sessionStateSchema.safeParse(state).success).toBe(true);
      expect(state.tracks.map((t) => t.id)).toEqual(["so2", "o3", "no2", "co"]);
      expect(state.data?.length).toBeGreaterThan(0);
      expect(client.store.seriesFor("o3")?.name).toBe("O3");
    } finally {
      client.close();
    }
  }, 20000);

  it("converges to the server snapshot after a scripted edit sequence", async () => {
    const client = await connect();
    const witness = await connect(); // second client sees only broadcasts
    try {
      const script: { event: WidgetEvent; applied: (s: SessionClient["store"]) => boolean }[] = [
        {
          event: { widget: "mute-button", track: "co", muted: true },
          applied: (s) => s.track("co")?.muted === true,
        },
        {
          event: { widget: "frequency-sliders", track: "so2", min: 261.6, range: 600 },
          applied: (s) => s.track("so2")?.mappings.frequency?.min === 261.6,
        },
        {
          event: { widget: "mode-toggle", track: "no2", mode: "discrete" },
          applied: (s) => s.track("no2")?.mode === "discrete",
        },
        {
          event: { widget: "threshold-fields", track: "no2", threshold: 1, increment: 2 },
          applied: (s) => s.track("no2")?.discrete?.threshold === 1,
        },
        {
          event: { widget: "speaker-drag", track: "o3", x: 0.25 },
          applied: (s) => s.track("o3")?.pan === 0.25,
        },
        {
          event: { widget: "rate-input", rate: 0.5 },
          applied: (s) => s.state?.rate === 0.5,
        },
      ];
      for (const { event, applied } of script) {
        emitEvent(event, (m) => client.send(m));
        await untilState(client, applied);
        expect(client.store.lastError).toBeNull();
      }
      await untilState(client, (s) => s.state?.rate === 0.5);
      await untilState(witness, (s) => s.state?.rate === 0.5);

      // both clients' views agree field-for-field (dataset rides only on
      // connect snapshots, so compare the control state)
      const strip = (s: object) => {
        const { data: _data, ...rest } = s as { data?: unknown };
        return rest;
      };
      expect(strip(client.store.state!)).toEqual(strip(witness.store.state!));

      const state = client.store.state!;
      expect(state.tracks.find((t) => t.id === "co")?.muted).toBe(true);
      expect(state.tracks.find((t) => t.id === "so2")?.mappings.frequency).toEqual({
        min: 261.6,
        range: 600,
      });
      const no2 = state.tracks.find((t) => t.id === "no2")!;
      expect(no2.mode).toBe("discrete");
      // switching to discrete mode announces the percussive envelope defaults
      expect(no2.envelope).toEqual({ attack: 0.01, decay: 0.2, sustain: 0, release: 0.05 });
      expect(no2.discrete).toEqual({ threshold: 1, increment: 2 });
    } finally {
      client.close();
      witness.close();
    }
  }, 30000);

  it("dragging the O3 speaker to the far right lands it at x = 1 on the server", async () => {
    const client = await connect();
    try {
      // drag across the stage; the last committed position is the far-right edge
      for (const px of [350, 500, 640]) {
        emitEvent(
          { widget: "speaker-drag", track: "o3", x: (px / 600) * 2 - 1 },
          (m) => client.send(m),
        );
        await new Promise((r) => setTimeout(r, 50)); // drag pacing
      }
      await untilState(client, (s) => s.track("o3")?.pan === 1);
      expect(client.store.track("o3")?.pan).toBe(1);
    } finally {
      client.close();
    }
  }, 20000);

  it("rejected edits surface as in-band errors and do not change state", async () => {
    const client = await connect();
    try {
      const before = JSON.stringify(client.store.state!.tracks);
      client.send({ type: "mute", track: "ghost", muted: true });
      await untilState(client, (s) => s.lastError !== null);
      expect(client.store.lastError?.code).toBe("validation");
      expect(JSON.stringify(client.store.state!.tracks)).toBe(before);
      expect(client.isClosed).toBe(false);
    } finally {
      client.close();
    }
  }, 20000);

  it("streams gapless audio chunks while playing", async () => {
    const scheduler = new ChunkScheduler(new NullSink(), 44100);
    const client = new SessionClient(wrapWebSocket(new WebSocket(url) as never), {
      scheduler,
      onBadFrame: (err) => {
        throw err;
      },
    });
    try {
      await untilState(client, (s) => s.state !== null);
      client.send({ type: "play" });
      await untilState(client, (s) => s.playing);
      await new Promise((r) => setTimeout(r, 1500));
      client.send({ type: "stop" });
      await untilState(client, (s) => !s.playing);
      expect(scheduler.stats.chunksScheduled).toBeGreaterThan(10);
      expect(scheduler.stats.gaps).toBe(0);
    } finally {
      client.close();
    }
  }, 30000);
});

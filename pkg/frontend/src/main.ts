/**
 * Browser entry point: a DAW-style control surface.
 *
 * Layout: a transport bar, a scrollable stack of track rows (synthesis
 * controls above a line plot with a playback cursor), and a spatial stage
 * with one draggable speaker per track plus an audio-reactive particle
 * field. All state comes from server snapshots; all edits leave as protocol
 * messages.
 */
import { SessionClient, wrapWebSocket } from "./client.js";
import { ChunkScheduler, WebAudioSink } from "./audio.js";
import { SliderThrottle, emitEvent, speakerXFromPixels, type WidgetEvent } from "./controls.js";
import { cssColor, cursorPixel, downsampleMinMax, valueToPixel } from "./plot.js";
import { ParticleField, type EmitterConfig, type EmitterLevel } from "./particles.js";
import type { Track } from "./protocol.js";

const PLOT_HEIGHT = 80;
const STAGE_HEIGHT = 260;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

class TrackRow {
  readonly root = el("div", "track-row");
  private readonly plot = el("canvas", "track-plot");
  private readonly muteButton = el("button", "mute", "mute");
  private readonly modeToggle = el("button", "mode");
  private readonly panThrottle: SliderThrottle<number>;

  constructor(
    private readonly trackId: string,
    private readonly client: SessionClient,
  ) {
    const emit = (event: WidgetEvent) => emitEvent(event, (m) => client.send(m));
    this.panThrottle = new SliderThrottle((x: number) =>
      emit({ widget: "speaker-drag", track: trackId, x }),
    );

    const controls = el("div", "track-controls");
    controls.append(el("span", "track-name", trackId), this.muteButton, this.modeToggle);
    this.muteButton.onclick = () => {
      const track = this.client.store.track(this.trackId);
      if (track) emit({ widget: "mute-button", track: this.trackId, muted: !track.muted });
    };
    this.modeToggle.onclick = () => {
      const track = this.client.store.track(this.trackId);
      if (!track) return;
      const mode = track.mode === "continuous" ? "discrete" : "continuous";
      emit({ widget: "mode-toggle", track: this.trackId, mode });
    };

    this.plot.height = PLOT_HEIGHT;
    this.root.append(controls, this.plot);
  }

  /** Throttled pan forwarding used by the stage drag handler. */
  dragSpeaker(x: number): void {
    this.panThrottle.push(x);
  }

  endSpeakerDrag(): void {
    this.panThrottle.flush();
  }

  render(track: Track): void {
    this.muteButton.classList.toggle("active", track.muted);
    this.modeToggle.textContent = track.mode;

    const series = this.client.store.seriesFor(this.trackId);
    const ctx = this.plot.getContext("2d");
    if (!series || !ctx) return;
    const width = (this.plot.width = this.plot.clientWidth || 600);
    ctx.clearRect(0, 0, width, PLOT_HEIGHT);
    ctx.strokeStyle = cssColor(series.color);
    ctx.beginPath();
    const points = downsampleMinMax(series.values, width);
    const n = series.values.length;
    for (const [i, p] of points.entries()) {
      const px = (p.x / Math.max(1, n - 1)) * (width - 1);
      const py = valueToPixel(p.y, series.min, series.max, PLOT_HEIGHT);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();

    ctx.strokeStyle = "#ffffff";
    const cx = cursorPixel(this.client.store.cursor, n, width);
    ctx.beginPath();
    ctx.moveTo(cx, 0);
    ctx.lineTo(cx, PLOT_HEIGHT);
    ctx.stroke();
  }
}

class SpatialStage {
  readonly root = el("canvas", "stage");
  private readonly field = new ParticleField();
  private dragging: string | null = null;
  private lastTick = performance.now();

  constructor(private readonly client: SessionClient, private readonly rows: Map<string, TrackRow>) {
    this.root.height = STAGE_HEIGHT;
    this.root.onpointerdown = (ev) => {
      this.dragging = this.hitTest(ev.offsetX, ev.offsetY);
      if (this.dragging) this.root.setPointerCapture(ev.pointerId);
    };
    this.root.onpointermove = (ev) => {
      if (!this.dragging) return;
      const x = speakerXFromPixels(ev.offsetX, 0, this.root.width);
      this.rows.get(this.dragging)?.dragSpeaker(x);
    };
    this.root.onpointerup = () => {
      if (this.dragging) this.rows.get(this.dragging)?.endSpeakerDrag();
      this.dragging = null;
    };
  }

  private speakerPixel(pan: number): { x: number; y: number } {
    return { x: ((pan + 1) / 2) * (this.root.width - 1), y: STAGE_HEIGHT * 0.3 };
  }

  private hitTest(px: number, py: number): string | null {
    for (const track of this.client.store.state?.tracks ?? []) {
      const pos = this.speakerPixel(track.pan);
      if (Math.hypot(px - pos.x, py - pos.y) < 14) return track.id;
    }
    return null;
  }

  render(): void {
    const ctx = this.root.getContext("2d");
    const state = this.client.store.state;
    if (!ctx || !state) return;
    const width = (this.root.width = this.root.clientWidth || 600);
    const now = performance.now();
    const dt = Math.min(0.1, (now - this.lastTick) / 1000);
    this.lastTick = now;

    const emitters = new Map<string, EmitterConfig>();
    const levels = new Map<string, EmitterLevel>();
    for (const track of state.tracks) {
      const series = this.client.store.seriesFor(track.id);
      const pos = this.speakerPixel(track.pan);
      emitters.set(track.id, {
        x: pos.x / width,
        y: pos.y / STAGE_HEIGHT,
        color: series ? cssColor(series.color) : "#999999",
      });
      const level = this.client.store.levels.tracks[track.id];
      if (level) levels.set(track.id, level);
    }
    this.field.update(emitters, levels, dt);

    ctx.clearRect(0, 0, width, STAGE_HEIGHT);
    for (const p of this.field.particles) {
      ctx.fillStyle = p.color;
      ctx.globalAlpha = Math.max(0, p.life);
      ctx.fillRect(p.x * width, p.y * STAGE_HEIGHT, 2, 2);
    }
    ctx.globalAlpha = 1;

    // listener glyph at center stage
    ctx.fillStyle = "#cccccc";
    ctx.beginPath();
    ctx.arc(width / 2, STAGE_HEIGHT * 0.75, 8, 0, 2 * Math.PI);
    ctx.fill();

    for (const track of state.tracks) {
      const pos = this.speakerPixel(track.pan);
      const series = this.client.store.seriesFor(track.id);
      ctx.fillStyle = series ? cssColor(series.color) : "#999999";
      ctx.fillRect(pos.x - 10, pos.y - 10, 20, 20);
    }
  }
}

export function boot(url = `ws://${location.hostname}:8765`): void {
  const context = new AudioContext();
  const scheduler = new ChunkScheduler(new WebAudioSink(context), context.sampleRate);
  const socket = wrapWebSocket(new WebSocket(url));
  const client = new SessionClient(socket, {
    scheduler,
    onBadFrame: (err) => console.warn("dropped bad frame", err),
  });

  const app = document.getElementById("app") ?? document.body;
  const transport = el("div", "transport");
  const playButton = el("button", undefined, "play");
  const stopButton = el("button", undefined, "stop");
  const resetButton = el("button", undefined, "reset");
  const errorBanner = el("div", "error-banner");
  transport.append(playButton, stopButton, resetButton);
  const trackList = el("div", "track-list");
  app.append(transport, errorBanner, trackList);

  const emit = (event: WidgetEvent) => emitEvent(event, (m) => client.send(m));
  playButton.onclick = () => {
    void context.resume();
    emit({ widget: "play" });
  };
  stopButton.onclick = () => emit({ widget: "stop" });
  resetButton.onclick = () => emit({ widget: "reset" });

  const rows = new Map<string, TrackRow>();
  const stage = new SpatialStage(client, rows);
  app.append(stage.root);

  client.store.subscribe((store) => {
    if (store.lastError) {
      errorBanner.textContent = `${store.lastError.code}: ${store.lastError.message}`;
    }
    for (const track of store.state?.tracks ?? []) {
      if (!rows.has(track.id)) {
        const row = new TrackRow(track.id, client);
        rows.set(track.id, row);
        trackList.append(row.root);
      }
    }
  });

  const frame = () => {
    const state = client.store.state;
    if (state) {
      for (const track of state.tracks) rows.get(track.id)?.render(track);
      stage.render();
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

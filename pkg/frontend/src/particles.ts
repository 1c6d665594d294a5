/**
 * Audio-reactive particle field for the spatial view.
 *
 * Each track's speaker sheds particles whose spawn rate scales with the
 * track's RMS level and whose clustering radius around the speaker shrinks
 * as the track's dominant frequency rises: louder means denser, higher-
 * pitched means tighter. This is a qualitative 2D approximation of the
 * original system's 3D particle view, whose exact parameters are not
 * recoverable; only the monotone loudness/pitch relationships are promised.
 */

export interface Particle {
  x: number;
  y: number;
  vx: number;
  vy: number;
  /** Remaining lifetime in seconds. */
  life: number;
  color: string;
}

export interface EmitterLevel {
  rms: number;
  freq: number;
}

export interface EmitterConfig {
  /** Speaker position in stage coordinates. */
  x: number;
  y: number;
  color: string;
}

export const MAX_PARTICLES = 2000;
/** Particles per second at full-scale RMS. */
const SPAWN_RATE_FULL_SCALE = 600;
/** Cluster radius bounds (stage units); radius shrinks with pitch. */
const RADIUS_MAX = 0.45;
const RADIUS_MIN = 0.05;
/** Pitch that pins the radius to its minimum. */
const FREQ_CEILING = 4000;
const PARTICLE_LIFE = 1.2;

/** Expected spawns per update; fractional part is spawned probabilistically. */
export function spawnCount(rms: number, dt: number, random: () => number): number {
  const expected = Math.min(1, Math.max(0, rms)) * SPAWN_RATE_FULL_SCALE * dt;
  const whole = Math.floor(expected);
  return whole + (random() < expected - whole ? 1 : 0);
}

/** Cluster radius for a dominant frequency; monotone non-increasing. */
export function clusterRadius(freq: number): number {
  const t = Math.min(1, Math.max(0, freq / FREQ_CEILING));
  return RADIUS_MAX - t * (RADIUS_MAX - RADIUS_MIN);
}

export class ParticleField {
  particles: Particle[] = [];

  constructor(private readonly random: () => number = Math.random) {}

  /** Advance existing particles and shed new ones from each emitter. */
  update(emitters: Map<string, EmitterConfig>, levels: Map<string, EmitterLevel>, dt: number): void {
    for (const p of this.particles) {
      p.x += p.vx * dt;
      p.y += p.vy * dt;
      p.life -= dt;
    }
    this.particles = this.particles.filter((p) => p.life > 0);

    for (const [id, emitter] of emitters) {
      const level = levels.get(id);
      if (!level || level.rms <= 0) continue;
      const radius = clusterRadius(level.freq);
      let count = spawnCount(level.rms, dt, this.random);
      count = Math.min(count, MAX_PARTICLES - this.particles.length);
      for (let i = 0; i < count; i++) {
        const angle = this.random() * 2 * Math.PI;
        const r = radius * Math.sqrt(this.random());
        this.particles.push({
          x: emitter.x + r * Math.cos(angle),
          y: emitter.y + r * Math.sin(angle),
          vx: 0.02 * (this.random() - 0.5),
          vy: 0.02 * (this.random() - 0.5),
          life: PARTICLE_LIFE,
          color: emitter.color,
        });
      }
    }
  }
}

export * from "./protocol.js";
export * from "./store.js";
export * from "./controls.js";
export * from "./plot.js";
export * from "./audio.js";
export * from "./particles.js";
export * from "./client.js";

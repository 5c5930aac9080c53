export * from "./protocol.js";
export * from "./raster.js";
export * from "./rle.js";
export * from "./palette.js";
export * from "./metrics.js";
export * from "./view.js";
export * from "./client.js";
export * from "./render.js";

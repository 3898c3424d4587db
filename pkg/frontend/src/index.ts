export * from "./api.js";
export * from "./sync.js";
export * from "./ridgeline.js";
export * from "./revision.js";
export * from "./views.js";

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the round-trip suite trains and serves a real model
    testTimeout: 120_000,
    hookTimeout: 120_000,
    fileParallelism: false,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // The e2e file provisions a corpus and trains a classifier before serving.
    testTimeout: 120_000,
    hookTimeout: 300_000,
  },
});

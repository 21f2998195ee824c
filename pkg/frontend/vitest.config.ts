import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // The end-to-end file waits on real boundary-value solves.
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});

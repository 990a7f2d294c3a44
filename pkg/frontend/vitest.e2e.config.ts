import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["e2e/**/*.test.ts"],
    testTimeout: 120000,
    hookTimeout: 60000,
    // one live simulation at a time
    fileParallelism: false,
  },
});

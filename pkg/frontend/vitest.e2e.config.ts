import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/e2e.test.ts"],
    globalSetup: "./tests/e2e.setup.ts",
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the workbench-loop suite boots the real service and runs full solves
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      // the review service owns all state; the UI is API-only
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
  },
});

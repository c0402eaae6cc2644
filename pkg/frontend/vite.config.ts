import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      // dev convenience: proxy API calls to a locally running fieldlog server
      ...Object.fromEntries(
        [
          "/messages", "/inbox", "/events", "/zones", "/users", "/streams",
          "/subscriptions", "/reports", "/anomalies", "/correlations",
          "/keywords", "/export", "/sensors", "/classify",
        ].map((path) => [path, { target: "http://127.0.0.1:8764", changeOrigin: true }]),
      ),
    },
  },
  test: {
    environment: "happy-dom",
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});

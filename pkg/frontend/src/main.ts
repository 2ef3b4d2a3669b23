import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    TAGSENSE_API?: string;
  }
}

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ApiClient(window.TAGSENSE_API ?? ""));
  void app.start();
}

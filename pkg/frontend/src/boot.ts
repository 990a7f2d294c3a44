// Browser entry point.

import { startApp } from "./main.js";

const root = document.getElementById("app");
if (root) {
  void startApp(root);
}

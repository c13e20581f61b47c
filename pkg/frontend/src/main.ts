import { ApiClient } from "./api.js";
import { ExplorerController } from "./state.js";
import { DomView } from "./view.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const view = new DomView(root);
const controller = new ExplorerController(new ApiClient(), view);
view.bind(controller);

const resume = new URLSearchParams(window.location.search).get("session");
if (resume) {
  controller.start().then(() => controller.resumeSession(resume));
} else {
  controller.start();
}

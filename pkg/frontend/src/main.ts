import { ApiClient } from "./api.js";
import { CapturePanel } from "./ui.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const serviceUrl = el<HTMLInputElement>("service-url");
const userId = el<HTMLInputElement>("user-id");
const galleryTarget = el<HTMLInputElement>("gallery-target");
const status = el<HTMLElement>("status");
const canvas = el<HTMLCanvasElement>("pad");

let panel = new CapturePanel(canvas, status, new ApiClient(serviceUrl.value));

serviceUrl.addEventListener("change", () => {
  panel = new CapturePanel(canvas, status, new ApiClient(serviceUrl.value));
  status.textContent = `service set to ${serviceUrl.value}`;
});

el<HTMLButtonElement>("btn-enroll").addEventListener("click", () => {
  panel.startEnroll(userId.value, parseInt(galleryTarget.value, 10) || 3);
});
el<HTMLButtonElement>("btn-verify").addEventListener("click", () => {
  panel.startVerify(userId.value);
});
el<HTMLButtonElement>("btn-redo").addEventListener("click", () => panel.redo());
el<HTMLButtonElement>("btn-health").addEventListener("click", () => {
  new ApiClient(serviceUrl.value)
    .health()
    .then((h) => (status.textContent =
      `service ${h.status}, model version ${h.model_version}`))
    .catch((e) => (status.textContent = `health check failed: ${e}`));
});

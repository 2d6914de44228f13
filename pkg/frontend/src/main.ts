import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const workerId = params.get("worker") ?? `anon-${Date.now()}`;
const base = params.get("api") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const client = new ApiClient(base, (input, init) => fetch(input, init));
void new AnnotationApp(root, client, workerId).start();

import { Client } from "./api.js";
import { createStudio } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8040";
createStudio(document.getElementById("root")!, new Client(base));

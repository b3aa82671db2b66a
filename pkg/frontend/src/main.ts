// Browser entry point: builds the model over the bridge transport and wires
// toolbar buttons and pane clicks to model commands.

import { CommandRefused, UiSessionModel } from "./model.js";
import { HttpTransport } from "./transport.js";
import {
  renderActions,
  renderBanner,
  renderEventLog,
  renderModal,
  renderSource,
  renderStack,
  renderStatus,
} from "./views.js";

const transport = new HttpTransport("");
const model = new UiSessionModel(transport);

function pane(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing pane ${id}`);
  return el;
}

function render(): void {
  pane("banner").innerHTML = renderBanner(model);
  pane("status").innerHTML = renderStatus(model);
  pane("source").innerHTML = renderSource(model);
  pane("stack").innerHTML = renderStack(model);
  pane("actions").innerHTML = renderActions(model);
  pane("events").innerHTML = renderEventLog(model);
  pane("modal").innerHTML = renderModal(model);
  const manual = model.region?.mode === "manual";
  (document.getElementById("table-start") as HTMLButtonElement).disabled = !manual;
  (document.getElementById("table-stop") as HTMLButtonElement).disabled = !manual;
}

model.onChange = render;

function report(err: unknown): void {
  if (err instanceof CommandRefused) return; // modal is up; buttons handle it
  const toast = pane("toast");
  toast.textContent = String((err as Error).message ?? err);
  toast.classList.add("show");
  setTimeout(() => toast.classList.remove("show"), 4000);
}

function command(fn: () => Promise<unknown>): void {
  fn().catch(report);
}

document.addEventListener("click", (ev) => {
  const target = (ev.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
  if (!target) return;
  const action = target.dataset.action;
  switch (action) {
    case "continue":
    case "step":
    case "next":
    case "finish":
      command(() => model.run(action));
      break;
    case "retry":
      command(() => model.retryFlow(Number(target.dataset.depth)));
      break;
    case "actions":
      command(() => model.loadActions(Number(target.dataset.depth), 0));
      break;
    case "page": {
      const depth = model.actionWindow?.depth ?? 0;
      command(() => model.loadActions(depth, Number(target.dataset.page)));
      break;
    }
    case "toggle-bp":
      command(() => model.setBreakpoint(target.dataset.line ?? ""));
      break;
    case "confirm-retry":
      command(() => model.confirmRetry());
      break;
    case "abort-retry":
      model.abortRetry();
      break;
    case "table-start":
      command(() => model.tableControl("start"));
      break;
    case "table-stop":
      command(() => model.tableControl("stop"));
      break;
    case "break-proc": {
      const input = document.getElementById("bp-input") as HTMLInputElement;
      if (input.value.trim()) command(() => model.setBreakpoint(input.value.trim()));
      break;
    }
    case "reconnect":
      location.reload();
      break;
    default:
      break;
  }
});

command(() => model.connect());

// DOM rendering: pure functions from the model to innerHTML, plus small
// helpers main.ts wires to buttons. No framework, no retained view state.

import { PAGE_SIZE, type UiSessionModel } from "./model.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderBanner(model: UiSessionModel): string {
  switch (model.connection) {
    case "connecting":
      return `<div class="banner">connecting...</div>`;
    case "busy":
      return `<div class="banner error">session busy: another client is attached</div>`;
    case "disconnected":
      return `<div class="banner error">disconnected <button data-action="reconnect">reconnect</button></div>`;
    default:
      return "";
  }
}

export function renderStatus(model: UiSessionModel): string {
  const region = model.region;
  const regionText = region
    ? `${region.mode}${region.start !== null ? ` [${region.start}, ${region.end ?? "..."})` : ""}`
    : "?";
  const where = model.stopLocation
    ? `${model.stopLocation.proc}:${model.stopLocation.line}:${model.stopLocation.col}`
    : "";
  const state = model.halted ? "halted (divergence)" : model.status;
  return (
    `<span class="chip">state: ${esc(state)}</span>` +
    `<span class="chip">stop: ${esc(model.stopReason ?? "")} ${esc(where)}</span>` +
    `<span class="chip">counter: ${model.counter}</span>` +
    `<span class="chip">tabling: ${esc(regionText)}</span>` +
    (model.exitCode !== null && model.status === "exited"
      ? `<span class="chip">exit code ${model.exitCode}</span>`
      : "")
  );
}

export function renderSource(model: UiSessionModel): string {
  const stopLine = model.stopLocation?.line ?? -1;
  const bpLines = new Set(
    model.breakpoints
      .filter((b) => b.startsWith("line "))
      .map((b) => parseInt(b.slice(5), 10)),
  );
  const rows = model.sourceText.split("\n").map((text, i) => {
    const line = i + 1;
    const marks = `${bpLines.has(line) ? "●" : " "}${line === stopLine ? "▶" : " "}`;
    const cls = line === stopLine ? "line current" : "line";
    return (
      `<div class="${cls}" data-line="${line}">` +
      `<span class="gutter" data-action="toggle-bp" data-line="${line}">${marks}${String(line).padStart(3)}</span>` +
      `<span class="code">${esc(text)}</span></div>`
    );
  });
  return rows.join("");
}

export function renderStack(model: UiSessionModel): string {
  if (!model.frames.length) return `<p class="muted">no frames</p>`;
  const rows = model.frames
    .map((f) => {
      const site = f.call_site ? `${f.call_site.line}:${f.call_site.col}` : "entry";
      return (
        `<tr data-depth="${f.depth}">` +
        `<td>#${f.depth}</td><td>${esc(f.proc)}</td><td>${site}</td>` +
        `<td class="num">${f.io_counter_on_entry}</td>` +
        `<td><button data-action="retry" data-depth="${f.depth}">retry</button>` +
        `<button data-action="actions" data-depth="${f.depth}">i/o</button></td></tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th></th><th>proc</th><th>called at</th>` +
    `<th>counter at entry</th><th></th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderActions(model: UiSessionModel): string {
  if (model.actionError) return `<p class="muted">${esc(model.actionError)}</p>`;
  const window = model.actionWindow;
  if (!window) return `<p class="muted">pick a frame to list its I/O actions</p>`;
  if (window.total === 0) return `<p class="muted">no I/O in this call</p>`;
  const rows = window.actions
    .map(
      (a) =>
        `<tr><td class="num">#${a.n}</td><td>${esc(a.name)}</td>` +
        `<td>${esc(a.inputs.join(", "))}</td><td>${esc(a.outputs.join(", "))}</td>` +
        `<td>${a.replayed ? '<span class="badge">replayed</span>' : '<span class="badge performed">performed</span>'}</td></tr>`,
    )
    .join("");
  const page = model.currentPage();
  const pages = model.pageCount();
  const pager =
    pages > 1
      ? `<div class="pager"><button data-action="page" data-page="${page - 1}" ${page === 0 ? "disabled" : ""}>prev</button>` +
        ` page ${page + 1} / ${pages} ` +
        `<button data-action="page" data-page="${page + 1}" ${page + 1 >= pages ? "disabled" : ""}>next</button></div>`
      : "";
  return (
    `<p class="muted">frame #${window.depth}: actions [${window.entry}, ${window.exit}), ` +
    `${window.total} total, ${PAGE_SIZE} per page</p>` +
    `<table><thead><tr><th>n</th><th>primitive</th><th>inputs</th><th>outputs</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>${pager}`
  );
}

// The confirmation dialog shows the server's safety report verbatim.
export function renderModal(model: UiSessionModel): string {
  const pending = model.pendingConfirmation;
  if (!pending) return "";
  const r = pending.report;
  return (
    `<div class="modal-backdrop"><div class="modal">` +
    `<h3>unsafe retry</h3>` +
    `<p>${esc(r.reason ?? "")}</p>` +
    `<table class="report">` +
    `<tr><td>target depth</td><td>${r.target_depth}</td></tr>` +
    `<tr><td>entry counter</td><td>${r.entry_counter}</td></tr>` +
    `<tr><td>current counter</td><td>${r.current_counter}</td></tr>` +
    `<tr><td>I/O actions crossed</td><td id="modal-n-actions">${r.n_actions}</td></tr>` +
    `<tr><td>all tabled</td><td>${r.all_tabled}</td></tr>` +
    `<tr><td>verdict</td><td>${esc(r.verdict)}</td></tr>` +
    `</table>` +
    `<div class="modal-buttons">` +
    `<button data-action="abort-retry">abort</button>` +
    `<button data-action="confirm-retry" class="danger">retry anyway</button>` +
    `</div></div></div>`
  );
}

export function renderEventLog(model: UiSessionModel): string {
  const recent = model.eventLog.slice(-12);
  return recent
    .map((e) => {
      if (e.type === "io_action") {
        const p = e.payload as { n: number; name: string; replayed: boolean };
        return `<div class="ev">io #${p.n} ${esc(p.name)}${p.replayed ? " (replayed)" : ""}</div>`;
      }
      if (e.type === "warning") {
        return `<div class="ev warn">${esc(String((e.payload as { text: string }).text))}</div>`;
      }
      if (e.type === "divergence") {
        return `<div class="ev error">divergence: ${esc(String((e.payload as { message: string }).message))}</div>`;
      }
      return `<div class="ev">${esc(e.type)} ${esc(JSON.stringify(e.payload))}</div>`;
    })
    .join("");
}

// UiSessionModel: the browser-side mirror of one debug session.
//
// The model holds no authoritative state: everything in it came from a server
// response or event, and after any state-changing event it re-requests the
// stack and status so nothing stale survives. While an unsafe retry awaits
// confirmation, every command except confirm/abort is refused.

import {
  decodeLine,
  encodeRequest,
  isResponse,
  type EventMessage,
  type Frame,
  type IoAction,
  type RegionInfo,
  type Response,
  type RetryReport,
  type StopLocation,
} from "./protocol.js";
import type { Transport } from "./transport.js";

export const PAGE_SIZE = 20;

export type ConnectionState = "connecting" | "connected" | "busy" | "disconnected";

export interface PendingConfirmation {
  depth: number;
  report: RetryReport;
}

export interface ActionWindow {
  depth: number;
  entry: number;
  exit: number;
  total: number;
  offset: number;
  actions: IoAction[];
}

export class CommandRefused extends Error {}

type Waiter = { resolve: (r: Response) => void; reject: (e: Error) => void };

export class UiSessionModel {
  connection: ConnectionState = "connecting";
  frames: Frame[] = [];
  stopReason: string | null = null;
  stopLocation: StopLocation | null = null;
  sourcePath: string | null = null;
  sourceText = "";
  breakpoints: string[] = [];
  counter = 0;
  region: RegionInfo | null = null;
  status = "unknown";
  halted = false;
  exitCode: number | null = null;
  actionWindow: ActionWindow | null = null;
  actionError: string | null = null;
  pendingConfirmation: PendingConfirmation | null = null;
  divergence: Record<string, unknown> | null = null;
  eventLog: EventMessage[] = [];
  onChange: (() => void) | null = null;

  private nextId = 1;
  private waiter: Waiter | null = null;
  private queue: Array<() => void> = [];

  constructor(private transport: Transport) {
    transport.onLine((line) => this.receive(line));
    transport.onClose(() => {
      if (this.connection !== "busy") this.connection = "disconnected";
      this.changed();
    });
  }

  private changed(): void {
    if (this.onChange) this.onChange();
  }

  private receive(line: string): void {
    const message = decodeLine(line);
    if (isResponse(message)) {
      const waiter = this.waiter;
      this.waiter = null;
      if (waiter) waiter.resolve(message);
      else console.warn("response with no request in flight", message);
      return;
    }
    this.applyEvent(message);
  }

  private applyEvent(event: EventMessage): void {
    this.eventLog.push(event);
    switch (event.type) {
      case "error":
        if ((event.payload as { reason?: string }).reason === "session busy") {
          this.connection = "busy";
        }
        break;
      case "stopped": {
        const p = event.payload as { reason: string; location: StopLocation | null };
        this.stopReason = p.reason;
        this.stopLocation = p.location;
        break;
      }
      case "exited":
        this.status = "exited";
        this.exitCode = (event.payload as { code: number }).code;
        break;
      case "divergence":
        this.halted = true;
        this.divergence = event.payload;
        break;
      default:
        break; // io_action / warning / retried land in the event log
    }
    this.changed();
  }

  /** Send one command; commands are strictly serialized, one in flight. */
  private request(cmd: string, args: Record<string, unknown> = {}): Promise<Response> {
    if (this.pendingConfirmation && cmd !== "retry") {
      return Promise.reject(
        new CommandRefused("an unsafe retry awaits confirmation; confirm or abort first"),
      );
    }
    return this.enqueue(cmd, args);
  }

  private enqueue(cmd: string, args: Record<string, unknown>): Promise<Response> {
    return new Promise<Response>((resolve, reject) => {
      const fire = () => {
        this.waiter = {
          resolve: (r) => {
            resolve(r);
            this.pump();
          },
          reject: (e) => {
            reject(e);
            this.pump();
          },
        };
        this.transport.send(encodeRequest({ id: this.nextId++, cmd, args }));
      };
      if (this.waiter === null) fire();
      else this.queue.push(fire);
    });
  }

  private pump(): void {
    const next = this.queue.shift();
    if (next) next();
  }

  private async ok(cmd: string, args: Record<string, unknown> = {}): Promise<Record<string, unknown>> {
    const response = await this.request(cmd, args);
    if (!response.ok) throw new Error(`${cmd}: ${response.error}`);
    return response.body ?? {};
  }

  // --- lifecycle ---

  /** Handshake: stack + source + status populate the model. */
  async connect(): Promise<void> {
    const stack = await this.ok("stack");
    this.frames = (stack.frames as Frame[]) ?? [];
    const source = await this.ok("source");
    this.sourcePath = (source.path as string | null) ?? null;
    this.sourceText = (source.text as string) ?? "";
    await this.refreshInfo();
    this.connection = "connected";
    this.changed();
  }

  async refresh(): Promise<void> {
    const stack = await this.ok("stack");
    this.frames = (stack.frames as Frame[]) ?? [];
    await this.refreshInfo();
    this.changed();
  }

  private async refreshInfo(): Promise<void> {
    const info = await this.ok("info");
    this.counter = info.counter as number;
    this.status = info.status as string;
    this.halted = info.halted as boolean;
    this.region = info.region as unknown as RegionInfo;
    this.exitCode = (info.exit_code as number) ?? null;
    this.stopLocation = (info.location as StopLocation | null) ?? null;
  }

  // --- commands ---

  async setBreakpoint(spec: string): Promise<void> {
    const body = await this.ok("break", { spec });
    this.breakpoints = body.breakpoints as string[];
    this.changed();
  }

  async run(cmd: "continue" | "step" | "next" | "finish"): Promise<void> {
    await this.ok(cmd);
    await this.refresh();
  }

  /**
   * Send a retry; if the server says the span is unsafe, hold the report for
   * the confirmation dialog instead of proceeding.
   */
  async retryFlow(depth: number): Promise<RetryReport> {
    const body = (await this.ok("retry", { depth })) as unknown as RetryReport;
    if (body.needs_confirm) {
      this.pendingConfirmation = { depth, report: body };
      this.changed();
    } else {
      await this.refresh();
    }
    return body;
  }

  async confirmRetry(): Promise<void> {
    const pending = this.pendingConfirmation;
    if (!pending) throw new CommandRefused("nothing to confirm");
    this.pendingConfirmation = null;
    await this.ok("retry", { depth: pending.depth, force: true });
    await this.refresh();
  }

  abortRetry(): void {
    if (!this.pendingConfirmation) throw new CommandRefused("nothing to abort");
    this.pendingConfirmation = null;
    this.changed();
  }

  /** Load one page of a frame's recorded I/O actions. */
  async loadActions(depth: number, page: number): Promise<void> {
    try {
      const body = await this.ok("io-actions", { depth, offset: page * PAGE_SIZE, limit: PAGE_SIZE });
      this.actionWindow = {
        depth,
        entry: body.entry as number,
        exit: body.exit as number,
        total: body.total as number,
        offset: body.offset as number,
        actions: body.actions as IoAction[],
      };
      this.actionError = null;
    } catch (err) {
      this.actionWindow = null;
      this.actionError = String((err as Error).message ?? err);
    }
    this.changed();
  }

  pageCount(): number {
    if (!this.actionWindow) return 0;
    return Math.ceil(this.actionWindow.total / PAGE_SIZE);
  }

  currentPage(): number {
    if (!this.actionWindow) return 0;
    return Math.floor(this.actionWindow.offset / PAGE_SIZE);
  }

  async tableControl(action: "start" | "stop"): Promise<void> {
    const body = await this.ok("table", { action });
    this.region = body as unknown as RegionInfo;
    this.changed();
  }

  async safety(depth: number): Promise<RetryReport> {
    return (await this.ok("safety", { depth })) as unknown as RetryReport;
  }

  async quit(): Promise<void> {
    await this.ok("quit");
    this.transport.close();
  }
}

// Wire protocol types and the newline-delimited JSON codec.
// The server speaks: request -> zero or more event lines, then one response.

export interface Request {
  id: number;
  cmd: string;
  args: Record<string, unknown>;
}

export interface Response {
  id: number | null;
  ok: boolean;
  body?: Record<string, unknown>;
  error?: string;
}

export interface EventMessage {
  type: string;
  payload: Record<string, unknown>;
}

export type ServerMessage = Response | EventMessage;

export interface Frame {
  depth: number;
  proc: string;
  call_site: { line: number; col: number } | null;
  io_counter_on_entry: number;
}

export interface IoAction {
  n: number;
  name: string;
  inputs: string[];
  outputs: string[];
  replayed: boolean;
  tabled: boolean;
}

export interface RetryReport {
  target_depth: number;
  entry_counter: number;
  current_counter: number;
  n_actions: number;
  all_tabled: boolean;
  verdict: "safe" | "unsafe";
  reason: string | null;
  needs_confirm: boolean;
  retried: boolean;
}

export interface StopLocation {
  proc: string;
  line: number;
  col: number;
}

export interface RegionInfo {
  mode: string;
  start: number | null;
  end: number | null;
  enabled: boolean;
}

export function encodeRequest(req: Request): string {
  return JSON.stringify(req);
}

export function decodeLine(line: string): ServerMessage {
  const parsed = JSON.parse(line) as Record<string, unknown>;
  if (typeof parsed !== "object" || parsed === null) {
    throw new Error(`not a protocol message: ${line}`);
  }
  if ("id" in parsed) {
    return parsed as unknown as Response;
  }
  if ("type" in parsed) {
    return parsed as unknown as EventMessage;
  }
  throw new Error(`unrecognized message shape: ${line}`);
}

export function isResponse(msg: ServerMessage): msg is Response {
  return "id" in msg;
}

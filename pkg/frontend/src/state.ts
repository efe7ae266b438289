import type {
  GatewayEvent,
  LogEntry,
  PendingApproval,
  PolicyInfo,
  PoseDict,
  SessionSnapshot,
} from './types.js';

/**
 * The whole console view is a pure fold over the gateway event stream,
 * seeded by REST snapshots. Re-folding the same events always produces
 * the same view, which is what the snapshot tests rely on.
 */
export interface SessionView {
  status: string;
  lastSeq: number;
  log: LogEntry[];
  sayLines: string[];
  pending: PendingApproval | null;
  recording: boolean;
  recordedSteps: number;
  policies: PolicyInfo[];
  posePoints: PoseDict[];
  busy: boolean;
  notice: string;
}

export function initView(): SessionView {
  return {
    status: 'idle',
    lastSeq: 0,
    log: [],
    sayLines: [],
    pending: null,
    recording: false,
    recordedSteps: 0,
    policies: [],
    posePoints: [],
    busy: false,
    notice: '',
  };
}

function describe(event: GatewayEvent): string {
  const p = event.payload as Record<string, string>;
  switch (event.type) {
    case 'transcript':
      return `» ${p.text}`;
    case 'keyword':
      return `keyword: ${p.action}`;
    case 'codegen_started':
      return `generating for "${p.utterance}"`;
    case 'codegen_result':
      return `code ready: ${p.top}`;
    case 'awaiting_approval':
      return `awaiting approval: ${p.utterance}`;
    case 'execution_started':
      return `executing "${p.utterance}"`;
    case 'say':
      return `robot says: ${p.text}`;
    case 'pose':
      return 'pose update';
    case 'execution_finished':
      return `finished (${p.status})`;
    case 'recording_state':
      return 'recording update';
    case 'policy_saved':
      return `policy saved: ${p.name}`;
    case 'error':
      return `error: ${p.detail ?? p.message ?? ''}`;
    default:
      return event.type;
  }
}

/** Apply one event. Events at or below lastSeq are replays and are dropped. */
export function reduce(view: SessionView, event: GatewayEvent): SessionView {
  if (event.seq <= view.lastSeq) {
    return view;
  }
  const next: SessionView = {
    ...view,
    lastSeq: event.seq,
    log: [...view.log, { seq: event.seq, ts: event.ts, kind: event.type, text: describe(event) }],
  };
  const p = event.payload as Record<string, unknown>;
  switch (event.type) {
    case 'transcript':
      next.busy = true;
      next.notice = '';
      break;
    case 'codegen_started':
      next.status = 'generating';
      break;
    case 'awaiting_approval':
      next.status = 'awaiting_approval';
      next.pending = {
        commandId: String(p.command_id),
        utterance: String(p.utterance),
        code: String(p.code),
      };
      break;
    case 'execution_started':
      next.status = 'executing';
      next.pending = null;
      break;
    case 'say':
      next.sayLines = [...view.sayLines, String(p.text)];
      break;
    case 'pose':
      next.posePoints = [...view.posePoints, p as unknown as PoseDict];
      break;
    case 'execution_finished':
      next.status = 'idle';
      next.busy = false;
      next.pending = null;
      break;
    case 'recording_state':
      next.recording = Boolean(p.recording);
      if (typeof p.steps === 'number') {
        next.recordedSteps = p.steps;
      }
      if (!next.recording) {
        next.recordedSteps = 0;
      }
      break;
    case 'policy_saved':
      next.recording = false;
      next.recordedSteps = 0;
      break;
    case 'error':
      next.busy = false;
      break;
    default:
      break;
  }
  return next;
}

export function foldEvents(view: SessionView, events: GatewayEvent[]): SessionView {
  return events.reduce(reduce, view);
}

/** Seed the fold with REST snapshot data fetched on connect. */
export function applySnapshots(
  view: SessionView,
  session: SessionSnapshot,
  policies: PolicyInfo[],
): SessionView {
  return {
    ...view,
    status: session.status,
    busy: session.status !== 'idle' && session.status !== 'recording_name',
    recording: session.recording !== null,
    recordedSteps: session.recording?.steps ?? 0,
    pending: session.pending
      ? {
          commandId: session.pending.command_id,
          utterance: session.pending.utterance,
          code: session.pending.code,
        }
      : null,
    policies,
  };
}

/** The generation directive comment shown highlighted above pending code. */
export function directiveLine(utterance: string): string {
  return '#define function: ' + utterance.trim().replace(/[.!?,;:\s]+$/u, '').toLowerCase();
}

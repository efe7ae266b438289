export type EventType =
  | 'transcript'
  | 'keyword'
  | 'codegen_started'
  | 'codegen_result'
  | 'awaiting_approval'
  | 'execution_started'
  | 'say'
  | 'pose'
  | 'execution_finished'
  | 'recording_state'
  | 'policy_saved'
  | 'error';

export interface GatewayEvent {
  type: EventType;
  seq: number;
  ts: number;
  payload: Record<string, unknown>;
}

export interface PolicyInfo {
  name: string;
  enabled: boolean;
  learned: boolean;
  loaded: boolean;
  error: string;
}

export interface PoseDict {
  position: [number, number, number];
  orientation: [number, number, number, number];
}

export interface WorldSnapshot {
  objects: Record<string, PoseDict>;
  ee_pose: PoseDict;
  gripper: string;
  held_object: string | null;
}

export interface SessionSnapshot {
  status: string;
  context: string[];
  recording: { steps: number } | null;
  pending: { command_id: string; utterance: string; code: string } | null;
  approval_required: boolean;
}

export interface PendingApproval {
  commandId: string;
  utterance: string;
  code: string;
}

export interface LogEntry {
  seq: number;
  ts: number;
  kind: EventType;
  text: string;
}

import { GatewayApi, ApiError } from './api.js';
import { applySnapshots, directiveLine, initView, reduce, SessionView } from './state.js';
import { EventSocket } from './socket.js';
import { drawTrace } from './trace.js';
import type { GatewayEvent, WorldSnapshot } from './types.js';

const api = new GatewayApi('');
let view: SessionView = initView();
let world: WorldSnapshot | null = null;
let shownPolicyText = '';

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el;
}

function setNotice(text: string): void {
  view = { ...view, notice: text };
  render();
}

async function guard(action: () => Promise<void>): Promise<void> {
  try {
    await action();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setNotice('Busy: a command is already in flight, input refused.');
    } else {
      setNotice(String(err instanceof Error ? err.message : err));
    }
  }
}

function onEvent(event: GatewayEvent): void {
  view = reduce(view, event);
  render();
}

async function refreshSnapshots(): Promise<void> {
  const [session, policies, worldSnap] = await Promise.all([
    api.session(),
    api.policies(),
    api.world(),
  ]);
  world = worldSnap;
  view = applySnapshots(view, session, policies);
  render();
}

function render(): void {
  $('status').textContent = view.status;
  $('notice').textContent = view.notice;
  $('recording').textContent = view.recording
    ? `recording (${view.recordedSteps} steps)`
    : '';

  const input = $('command-input') as HTMLInputElement;
  const sendButton = $('command-send') as HTMLButtonElement;
  sendButton.disabled = view.busy || input.value.trim() === '';

  const log = $('event-log');
  log.innerHTML = '';
  for (const entry of view.log) {
    const line = document.createElement('div');
    line.className = `log-line log-${entry.kind}`;
    line.textContent = `${entry.seq.toString().padStart(4, ' ')}  ${entry.text}`;
    log.appendChild(line);
  }
  log.scrollTop = log.scrollHeight;

  const say = $('say-lines');
  say.innerHTML = '';
  for (const text of view.sayLines) {
    const line = document.createElement('div');
    line.textContent = text;
    say.appendChild(line);
  }

  const approval = $('approval-panel');
  if (view.pending) {
    approval.classList.remove('hidden');
    $('approval-directive').textContent = directiveLine(view.pending.utterance);
    $('approval-code').textContent = view.pending.code;
  } else {
    approval.classList.add('hidden');
  }

  const policyList = $('policy-list');
  policyList.innerHTML = '';
  for (const policy of view.policies) {
    const row = document.createElement('div');
    row.className = 'policy-row';

    const checkbox = document.createElement('input');
    checkbox.type = 'checkbox';
    checkbox.checked = policy.enabled;
    checkbox.onchange = () =>
      guard(async () => {
        await api.setPolicyEnabled(policy.name, checkbox.checked);
        await refreshSnapshots();
      });

    const label = document.createElement('span');
    label.textContent = policy.name + (policy.learned ? '  [learned]' : '');

    const viewButton = document.createElement('button');
    viewButton.textContent = 'view';
    viewButton.onclick = () =>
      guard(async () => {
        shownPolicyText = await api.policyText(policy.name);
        ($('policy-text') as HTMLElement).textContent = shownPolicyText;
      });

    const deleteButton = document.createElement('button');
    deleteButton.textContent = 'delete';
    deleteButton.onclick = () =>
      guard(async () => {
        await api.deletePolicy(policy.name);
        await refreshSnapshots();
      });

    row.append(checkbox, label, viewButton, deleteButton);
    policyList.appendChild(row);
  }

  drawTrace($('trace-xy') as HTMLCanvasElement, view.posePoints, world, 'xy');
  drawTrace($('trace-xz') as HTMLCanvasElement, view.posePoints, world, 'xz');
}

function wireControls(): void {
  const input = $('command-input') as HTMLInputElement;
  input.oninput = () => render();

  ($('command-form') as HTMLFormElement).onsubmit = (submitEvent) => {
    submitEvent.preventDefault();
    const text = input.value.trim();
    if (!text || view.busy) {
      return;
    }
    guard(async () => {
      await api.submitCommand(text);
      input.value = '';
      render();
    });
  };

  ($('stop-button') as HTMLButtonElement).onclick = () => guard(() => api.stop());

  ($('approve-button') as HTMLButtonElement).onclick = () => {
    const pending = view.pending;
    if (pending) {
      guard(() => api.approve(pending.commandId));
    }
  };
  ($('reject-button') as HTMLButtonElement).onclick = () => {
    const pending = view.pending;
    if (pending) {
      guard(() => api.reject(pending.commandId));
    }
  };

  ($('record-start') as HTMLButtonElement).onclick = () =>
    guard(async () => {
      await api.startRecording();
    });
  ($('record-discard') as HTMLButtonElement).onclick = () =>
    guard(async () => {
      await api.discardRecording();
    });
  ($('record-form') as HTMLFormElement).onsubmit = (submitEvent) => {
    submitEvent.preventDefault();
    const name = ($('record-name') as HTMLInputElement).value.trim();
    const hint = ($('record-hint') as HTMLInputElement).value.trim();
    if (!name || !hint) {
      return;
    }
    guard(async () => {
      await api.saveRecording(name, hint);
      await refreshSnapshots();
    });
  };

  // Optional browser speech capture; posts through the same endpoint as typing.
  const speech = (window as unknown as Record<string, unknown>).webkitSpeechRecognition as
    | (new () => { onresult: (e: unknown) => void; start: () => void })
    | undefined;
  const micButton = $('mic-button') as HTMLButtonElement;
  if (!speech) {
    micButton.disabled = true;
    micButton.title = 'speech capture not available in this browser';
  } else {
    micButton.onclick = () => {
      const recognizer = new speech();
      recognizer.onresult = (result: unknown) => {
        const transcript = (result as { results: { 0: { 0: { transcript: string } } } })
          .results[0][0].transcript;
        guard(() => api.submitCommand(transcript).then(() => {}));
      };
      recognizer.start();
    };
  }
}

async function main(): Promise<void> {
  wireControls();
  await refreshSnapshots();
  const scheme = location.protocol === 'https:' ? 'wss' : 'ws';
  const socket = new EventSocket(`${scheme}://${location.host}/ws`, onEvent, (connected) => {
    $('connection').textContent = connected ? 'connected' : 'reconnecting…';
    if (connected) {
      // Pick up anything missed while disconnected.
      void refreshSnapshots();
    }
  });
  socket.connect();
}

main().catch((err) => {
  document.body.textContent = `console failed to start: ${err}`;
});

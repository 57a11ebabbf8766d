import "./style.css";
import {
  Mode,
  StatusDoc,
  clampZoom,
  getStatus,
  newSession,
  postMode,
} from "./api";
import { ManualSource, OrientationSource, PoseSource } from "./pose";
import { StreamClient } from "./stream";
import { TelemetrySender } from "./telemetry";

const params = new URLSearchParams(location.search);
const session = newSession(params.get("server") ?? "");
session.zoom = clampZoom(Number(params.get("zoom") ?? "1"));

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const view = $<HTMLImageElement>("view");
const banner = $<HTMLDivElement>("banner");
const overlay = $<HTMLDivElement>("overlay");
const statusLine = $<HTMLDivElement>("status-line");
const targetInput = $<HTMLInputElement>("target");
const targetLabels = $<HTMLDataListElement>("target-labels");
const zoomSlider = $<HTMLInputElement>("zoom");
const zoomReadout = $<HTMLSpanElement>("zoom-readout");
const modeButtons = {
  vr: $<HTMLButtonElement>("mode-vr"),
  track: $<HTMLButtonElement>("mode-track"),
};
const sliders = {
  yaw: $<HTMLInputElement>("yaw"),
  pitch: $<HTMLInputElement>("pitch"),
  roll: $<HTMLInputElement>("roll"),
};
const sourceLabel = $<HTMLSpanElement>("pose-source");
const errorLine = $<HTMLDivElement>("error-line");

// ---------------------------------------------------------------- stream

let lastUrl: string | null = null;
const stream = new StreamClient(session.baseUrl, {
  onPart: (part) => {
    const url = URL.createObjectURL(
      new Blob([part.body as BlobPart], { type: "image/jpeg" }),
    );
    view.src = url;
    if (lastUrl) URL.revokeObjectURL(lastUrl);
    lastUrl = url;
  },
  onConnect: () => {
    session.connected = true;
    banner.hidden = true;
  },
  onDrop: (reason) => {
    session.connected = false;
    banner.textContent = `stream lost (${reason}), reconnecting...`;
    banner.hidden = false;
  },
});
stream.start();

// --------------------------------------------------------------- pose in

const manual = new ManualSource();
let orientation: PoseSource | null = null;
let active: PoseSource = manual;

if ("DeviceOrientationEvent" in window) {
  orientation = new OrientationSource(window);
}

// prefer the sensor once it produces data; sliders stay as override
function currentSource(): PoseSource {
  if (orientation && orientation.sample() !== null && active !== manual) {
    return orientation;
  }
  return active;
}

const telemetry = new TelemetrySender(session.baseUrl, {
  name: "active",
  sample: () => currentSource().sample(),
  setNeutral: () => currentSource().setNeutral(),
});
telemetry.start();

for (const axis of ["yaw", "pitch", "roll"] as const) {
  sliders[axis].addEventListener("input", () => {
    active = manual;
    manual.set(axis, Number(sliders[axis].value));
  });
}

window.addEventListener("keydown", (e) => {
  const nudges: Record<string, ["yaw" | "pitch", number]> = {
    ArrowLeft: ["yaw", -2],
    ArrowRight: ["yaw", 2],
    ArrowUp: ["pitch", 2],
    ArrowDown: ["pitch", -2],
  };
  const hit = nudges[e.key];
  if (!hit || session.mode !== "vr") return;
  active = manual;
  manual.nudge(hit[0], hit[1]);
  sliders[hit[0]].value = String(manual.get()[hit[0]]);
  e.preventDefault();
});

$<HTMLButtonElement>("neutral").addEventListener("click", () => {
  currentSource().setNeutral();
  for (const axis of ["yaw", "pitch", "roll"] as const) {
    sliders[axis].value = "0";
  }
});

$<HTMLButtonElement>("use-sensor").addEventListener("click", () => {
  if (orientation) active = orientation;
});

// ------------------------------------------------------------- mode out

async function applyMode(mode: Mode): Promise<void> {
  try {
    await postMode(session.baseUrl, mode, targetInput.value, session.zoom);
    session.mode = mode;
    telemetry.mode = mode; // hard-disables the uplink in track mode
    errorLine.textContent = "";
  } catch (err) {
    errorLine.textContent = String(err);
  }
  refreshModeUi();
}

function refreshModeUi(): void {
  modeButtons.vr.classList.toggle("active", session.mode === "vr");
  modeButtons.track.classList.toggle("active", session.mode === "track");
  for (const s of Object.values(sliders)) s.disabled = session.mode !== "vr";
}

modeButtons.vr.addEventListener("click", () => void applyMode("vr"));
modeButtons.track.addEventListener("click", () => void applyMode("track"));

zoomSlider.value = String(session.zoom);
zoomReadout.textContent = `${session.zoom.toFixed(1)}x`;
zoomSlider.addEventListener("change", () => {
  session.zoom = clampZoom(Number(zoomSlider.value));
  zoomReadout.textContent = `${session.zoom.toFixed(1)}x`;
  void applyMode(session.mode);
});

$<HTMLButtonElement>("vr-view").addEventListener("click", () => {
  document.body.classList.toggle("vr-fill");
});

// --------------------------------------------------------------- status

const seenLabels = new Set<string>();

function renderStatus(doc: StatusDoc): void {
  session.lastStatus = doc;
  const g = doc.gimbal;
  statusLine.textContent =
    `${doc.mode}${doc.target ? `:${doc.target}` : ""}  ` +
    `yaw ${g.yaw.toFixed(1)}  pitch ${g.pitch.toFixed(1)}  ` +
    `${doc.fps_1s} fps  zoom ${doc.zoom.toFixed(1)}x`;

  overlay.replaceChildren(
    ...doc.detections.map((d) => {
      const row = document.createElement("div");
      const dist = d.distance_m === null ? "" : ` ${d.distance_m.toFixed(1)} m`;
      row.textContent = `${d.label}${dist} (${Math.round(d.confidence * 100)}%)`;
      return row;
    }),
  );

  for (const d of doc.detections) {
    if (!seenLabels.has(d.label)) {
      seenLabels.add(d.label);
      const opt = document.createElement("option");
      opt.value = d.label;
      targetLabels.appendChild(opt);
    }
  }
}

setInterval(() => {
  getStatus(session.baseUrl)
    .then(renderStatus)
    .catch(() => undefined); // the stream banner already covers outages
}, 500);

sourceLabel.textContent = orientation ? "sensor + sliders" : "sliders";
refreshModeUi();

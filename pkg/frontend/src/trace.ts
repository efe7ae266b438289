import type { PoseDict, WorldSnapshot } from './types.js';

/**
 * 2-D projections of the pose stream. The geometry is computed here so it
 * can be unit-tested; the canvas rendering below just draws the result.
 */
export type Plane = 'xy' | 'xz';

export interface Point2D {
  u: number;
  v: number;
}

export function project(pose: PoseDict, plane: Plane): Point2D {
  const [x, y, z] = pose.position;
  return plane === 'xy' ? { u: x, v: y } : { u: x, v: z };
}

export function tracePoints(poses: PoseDict[], plane: Plane): Point2D[] {
  return poses.map((p) => project(p, plane));
}

export interface Segment {
  from: Point2D;
  to: Point2D;
}

export function traceSegments(poses: PoseDict[], plane: Plane): Segment[] {
  const points = tracePoints(poses, plane);
  const segments: Segment[] = [];
  for (let i = 1; i < points.length; i += 1) {
    segments.push({ from: points[i - 1], to: points[i] });
  }
  return segments;
}

export interface ObjectMarker {
  name: string;
  point: Point2D;
}

export function objectMarkers(world: WorldSnapshot, plane: Plane): ObjectMarker[] {
  return Object.entries(world.objects).map(([name, pose]) => ({
    name,
    point: project(pose, plane),
  }));
}

/** Map workspace coordinates into pixels, keeping aspect and a margin. */
export function makeScaler(
  points: Point2D[],
  width: number,
  height: number,
  margin = 20,
): (p: Point2D) => Point2D {
  let minU = -0.1;
  let maxU = 0.7;
  let minV = -0.5;
  let maxV = 0.6;
  for (const p of points) {
    minU = Math.min(minU, p.u);
    maxU = Math.max(maxU, p.u);
    minV = Math.min(minV, p.v);
    maxV = Math.max(maxV, p.v);
  }
  const scale = Math.min(
    (width - 2 * margin) / (maxU - minU || 1),
    (height - 2 * margin) / (maxV - minV || 1),
  );
  return (p: Point2D) => ({
    u: margin + (p.u - minU) * scale,
    v: height - margin - (p.v - minV) * scale,
  });
}

export function drawTrace(
  canvas: HTMLCanvasElement,
  poses: PoseDict[],
  world: WorldSnapshot | null,
  plane: Plane,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) {
    return;
  }
  const markers = world ? objectMarkers(world, plane) : [];
  const points = tracePoints(poses, plane);
  const toPx = makeScaler(points.concat(markers.map((m) => m.point)), canvas.width, canvas.height);

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = '10px sans-serif';

  ctx.fillStyle = '#888';
  for (const marker of markers) {
    const px = toPx(marker.point);
    ctx.beginPath();
    ctx.arc(px.u, px.v, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(marker.name, px.u + 6, px.v - 4);
  }

  ctx.strokeStyle = '#2b7de9';
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((point, i) => {
    const px = toPx(point);
    if (i === 0) {
      ctx.moveTo(px.u, px.v);
    } else {
      ctx.lineTo(px.u, px.v);
    }
  });
  ctx.stroke();

  if (points.length > 0) {
    const last = toPx(points[points.length - 1]);
    ctx.fillStyle = '#e94b2b';
    ctx.beginPath();
    ctx.arc(last.u, last.v, 5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

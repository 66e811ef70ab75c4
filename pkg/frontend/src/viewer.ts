/**
 * three.js binding: uploads draw lists from render-core and owns the canvas.
 *
 * Pointer gestures:
 *   drag               orbit the camera (writes client.view)
 *   wheel              zoom
 *   click on a point   toggle its mass in the selection
 *   shift-drag         apply force to the selection, scaled by N/pixel
 */
import * as THREE from "three";

import { SteerClient } from "./client";
import { DrawList, Topology, buildDrawList, dragToForce } from "./render-core";
import { Snapshot, commands } from "./protocol";

const PICK_RADIUS_PX = 12;

export class Viewer {
  topology: Topology | null = null;
  /** World-space newtons per pixel of shift-drag. */
  forceScale = 0.5;
  lastDrawList: DrawList | null = null;

  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private points: THREE.Points;
  private lines: THREE.LineSegments;
  private pointsGeometry = new THREE.BufferGeometry();
  private linesGeometry = new THREE.BufferGeometry();
  private selectedMaterial: THREE.PointsMaterial;
  private selectedPoints: THREE.Points;
  private selectedGeometry = new THREE.BufferGeometry();

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly client: SteerClient,
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setClearColor(0x14171c);
    this.camera = new THREE.PerspectiveCamera(
      50,
      canvas.clientWidth / Math.max(1, canvas.clientHeight),
      0.001,
      1000,
    );
    this.points = new THREE.Points(
      this.pointsGeometry,
      new THREE.PointsMaterial({ color: 0xd8dee9, size: 3, sizeAttenuation: false }),
    );
    this.lines = new THREE.LineSegments(
      this.linesGeometry,
      new THREE.LineBasicMaterial({ color: 0x4c566a, transparent: true, opacity: 0.5 }),
    );
    this.selectedMaterial = new THREE.PointsMaterial({
      color: 0xebcb8b,
      size: 7,
      sizeAttenuation: false,
    });
    this.selectedPoints = new THREE.Points(this.selectedGeometry, this.selectedMaterial);
    this.scene.add(this.lines, this.points, this.selectedPoints);
    this.bindPointer();
  }

  /** Upload the given snapshot and render one frame. */
  draw(snapshot: Snapshot | null): void {
    if (snapshot) {
      const list = buildDrawList(snapshot, this.topology);
      this.lastDrawList = list;
      this.pointsGeometry.setAttribute("position", new THREE.BufferAttribute(list.points, 3));
      this.pointsGeometry.computeBoundingSphere();
      this.linesGeometry.setAttribute("position", new THREE.BufferAttribute(list.segments, 3));
      this.uploadSelection(list);
    }
    this.placeCamera();
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = Math.max(1, this.canvas.clientHeight || this.canvas.height);
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.render(this.scene, this.camera);
  }

  private uploadSelection(list: DrawList): void {
    const chosen: number[] = [];
    list.pointIds.forEach((id, idx) => {
      if (this.client.selected.has(id)) {
        chosen.push(list.points[idx * 3]!, list.points[idx * 3 + 1]!, list.points[idx * 3 + 2]!);
      }
    });
    this.selectedGeometry.setAttribute(
      "position",
      new THREE.BufferAttribute(new Float32Array(chosen), 3),
    );
  }

  private placeCamera(): void {
    const { yaw, pitch, distance, target } = this.client.view;
    const cp = Math.cos(pitch);
    this.camera.position.set(
      target[0] + distance * cp * Math.sin(yaw),
      target[1] + distance * Math.sin(pitch),
      target[2] + distance * cp * Math.cos(yaw),
    );
    this.camera.lookAt(target[0], target[1], target[2]);
  }

  // ----------------------------------------------------------- interaction

  private bindPointer(): void {
    let dragging = false;
    let forceDrag = false;
    let startX = 0;
    let startY = 0;
    let lastX = 0;
    let lastY = 0;

    this.canvas.addEventListener("pointerdown", (ev) => {
      dragging = true;
      forceDrag = ev.shiftKey && this.client.selected.size > 0;
      startX = lastX = ev.clientX;
      startY = lastY = ev.clientY;
      this.canvas.setPointerCapture(ev.pointerId);
    });

    this.canvas.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      const dx = ev.clientX - lastX;
      const dy = ev.clientY - lastY;
      lastX = ev.clientX;
      lastY = ev.clientY;
      if (forceDrag) return; // force is emitted on release from the total drag
      const view = this.client.view;
      view.yaw -= dx * 0.008;
      view.pitch = Math.min(1.5, Math.max(-1.5, view.pitch + dy * 0.008));
    });

    this.canvas.addEventListener("pointerup", (ev) => {
      if (!dragging) return;
      dragging = false;
      const totalDx = ev.clientX - startX;
      const totalDy = ev.clientY - startY;
      const moved = Math.abs(totalDx) + Math.abs(totalDy);
      if (forceDrag && moved > 2) {
        const force = dragToForce(totalDx, totalDy, this.client.view, this.forceScale);
        this.client.send(commands.applyForce([...this.client.selected], force));
      } else if (!forceDrag && moved <= 2) {
        this.pick(ev);
      }
    });

    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.client.view.distance *= Math.exp(ev.deltaY * 0.001);
    });
  }

  private pick(ev: PointerEvent): void {
    const list = this.lastDrawList;
    if (!list) return;
    const rect = this.canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const v = new THREE.Vector3();
    let bestId: number | null = null;
    let bestDist = PICK_RADIUS_PX;
    for (let idx = 0; idx < list.pointIds.length; idx += 1) {
      v.set(list.points[idx * 3]!, list.points[idx * 3 + 1]!, list.points[idx * 3 + 2]!);
      v.project(this.camera);
      const sx = ((v.x + 1) / 2) * rect.width;
      const sy = ((1 - v.y) / 2) * rect.height;
      const d = Math.hypot(sx - px, sy - py);
      if (d < bestDist) {
        bestDist = d;
        bestId = list.pointIds[idx]!;
      }
    }
    if (bestId !== null) {
      if (this.client.selected.has(bestId)) this.client.selected.delete(bestId);
      else this.client.selected.add(bestId);
    }
  }
}

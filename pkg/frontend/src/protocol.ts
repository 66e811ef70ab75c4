/**
 * Wire protocol v1: newline-delimited JSON over a byte stream.
 *
 * The session opens with a hello exchange (client first); a version mismatch
 * is refused by the server with an error naming both versions.  After that
 * the server pushes snapshots at its emission rate and the client sends
 * commands.  NaN/Infinity never appear on the wire — the schemas reject them
 * on the way in and the encoder refuses them on the way out.
 */
import { z } from "zod";

export const PROTOCOL_VERSION = 1;

const finite = z.number().finite();
const massId = z.number().int().nonnegative();
const vec3 = z.tuple([finite, finite, finite]);

/** One decimated point: [mass id, x, y, z]. */
const positionRow = z.tuple([massId, finite, finite, finite]);

// ---------------------------------------------------------------- server ->

export const helloSchema = z.object({
  type: z.literal("hello"),
  version: z.number().int(),
});

export const snapshotSchema = z.object({
  type: z.literal("snapshot"),
  /** Simulation time in seconds. */
  t: finite,
  /** Step counter — the frame number the UI displays. */
  n: z.number().int().nonnegative(),
  positions: z.array(positionRow),
  /** [elastic, gravitational, kinetic] in joules. */
  energies: z.tuple([finite, finite, finite]),
  /** Springs processed per second since the previous emission. */
  throughput: finite,
});

export const errorSchema = z.object({
  type: z.literal("error"),
  text: z.string(),
});

export const fullStateSchema = z.object({
  type: z.literal("full_state"),
  t: finite,
  n: z.number().int().nonnegative(),
  positions: z.array(positionRow),
  velocities: z.array(positionRow),
});

export const serverMessageSchema = z.discriminatedUnion("type", [
  helloSchema,
  snapshotSchema,
  errorSchema,
  fullStateSchema,
]);

export type Hello = z.infer<typeof helloSchema>;
export type Snapshot = z.infer<typeof snapshotSchema>;
export type ServerError = z.infer<typeof errorSchema>;
export type FullState = z.infer<typeof fullStateSchema>;
export type ServerMessage = z.infer<typeof serverMessageSchema>;

// ---------------------------------------------------------------- client ->

const commandBase = { type: z.literal("command") };

const bareCommand = z.object({
  ...commandBase,
  name: z.enum(["pause", "resume", "reset", "clear_forces"]),
});

const setDampingCommand = z.object({
  ...commandBase,
  name: z.literal("set_damping"),
  value: finite,
});

const applyForceCommand = z.object({
  ...commandBase,
  name: z.literal("apply_force"),
  ids: z.array(massId).nonempty(),
  force: vec3,
});

const setActuationCommand = z
  .object({
    ...commandBase,
    name: z.literal("set_actuation"),
    group: z.string(),
    amplitude: finite.optional(),
    frequency: finite.optional(),
  })
  .refine((m) => m.amplitude !== undefined || m.frequency !== undefined, {
    message: "set_actuation needs an amplitude or a frequency",
  });

const setIntegratorCommand = z.object({
  ...commandBase,
  name: z.literal("set_integrator"),
  integrator: z.enum(["euler", "verlet", "rk4"]),
});

export const commandSchema = z.union([
  bareCommand,
  setDampingCommand,
  applyForceCommand,
  setActuationCommand,
  setIntegratorCommand,
]);

const clientHelloSchema = helloSchema;
const fullStateRequestSchema = z.object({ type: z.literal("full_state_request") });

export const clientMessageSchema = z.union([
  clientHelloSchema,
  commandSchema,
  fullStateRequestSchema,
]);

export type Command = z.infer<typeof commandSchema>;
export type ClientMessage = z.infer<typeof clientMessageSchema>;

// ------------------------------------------------------- encoding/decoding

export class ProtocolViolation extends Error {}

function parseOne<T>(schema: z.ZodType<T>, line: string): T {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new ProtocolViolation(`malformed message: ${(err as Error).message}`);
  }
  const result = schema.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    const path = issue && issue.path.length ? ` at ${issue.path.join(".")}` : "";
    throw new ProtocolViolation(
      `invalid message${path}: ${issue ? issue.message : "unknown"}`,
    );
  }
  return result.data;
}

export function decodeServerLine(line: string): ServerMessage {
  return parseOne(serverMessageSchema, line);
}

export function decodeClientLine(line: string): ClientMessage {
  return parseOne(clientMessageSchema, line);
}

/** One message as a newline-terminated JSON line, validated before encoding. */
export function encodeLine(message: ClientMessage): string {
  const checked = clientMessageSchema.safeParse(message);
  if (!checked.success) {
    throw new ProtocolViolation(
      `refusing to send invalid message: ${checked.error.issues[0]?.message}`,
    );
  }
  return JSON.stringify(checked.data) + "\n";
}

// ------------------------------------------------------------ constructors

/** The messages the controls emit; every builder returns a schema-valid object. */
export const commands = {
  hello(): ClientMessage {
    return { type: "hello", version: PROTOCOL_VERSION };
  },
  pause(): Command {
    return { type: "command", name: "pause" };
  },
  resume(): Command {
    return { type: "command", name: "resume" };
  },
  reset(): Command {
    return { type: "command", name: "reset" };
  },
  clearForces(): Command {
    return { type: "command", name: "clear_forces" };
  },
  /** Slider values land in [0, 0.99] no matter what the widget reports. */
  setDamping(value: number): Command {
    const clamped = Math.min(Math.max(value, 0), 0.99);
    return { type: "command", name: "set_damping", value: clamped };
  },
  applyForce(ids: number[], force: [number, number, number]): Command {
    return { type: "command", name: "apply_force", ids: [...ids] as [number, ...number[]], force };
  },
  setActuation(
    group: string,
    knobs: { amplitude?: number; frequency?: number },
  ): Command {
    return { type: "command", name: "set_actuation", group, ...knobs };
  },
  setIntegrator(integrator: "euler" | "verlet" | "rk4"): Command {
    return { type: "command", name: "set_integrator", integrator };
  },
  fullStateRequest(): ClientMessage {
    return { type: "full_state_request" };
  },
};

// Readout formatting.  The inspector mirrors the service's full-precision
// numbers rounded to 4 significant digits — display only, never fed back
// into requests.

export function sig4(value: number): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  if (value === 0) {
    return "0.000";
  }
  return value.toPrecision(4);
}

export function meters(value: number): string {
  return `${sig4(value)} m`;
}

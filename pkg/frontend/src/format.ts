// Small display helpers shared by the render modules.

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#039;");
}

export function fmt(x: number, digits = 4): string {
  if (!Number.isFinite(x)) return String(x);
  return x.toFixed(digits);
}

export function fmtSigned(x: number, digits = 4): string {
  const s = fmt(x, digits);
  return x >= 0 ? `+${s}` : s;
}

export function pct(x: number): string {
  return `${(100 * x).toFixed(1)}%`;
}

export function shortHash(h: string | null): string {
  return h ? h.slice(0, 12) : "?";
}

/** Middle-ellipsize long canonical codes so labels stay one line. */
export function truncateCode(code: string, maxChars = 28): string {
  if (code.length <= maxChars) return code;
  const keep = Math.floor((maxChars - 1) / 2);
  return `${code.slice(0, keep)}…${code.slice(code.length - keep)}`;
}

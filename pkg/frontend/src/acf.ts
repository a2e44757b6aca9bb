/** Sample autocorrelation at lags 0..maxLag (biased normalization). */
export function autocorrelation(series: number[], maxLag: number): number[] {
  const n = series.length;
  if (n <= maxLag) throw new Error(`series of length ${n} cannot support lag ${maxLag}`);
  const mean = series.reduce((a, b) => a + b, 0) / n;
  const centered = series.map((v) => v - mean);
  let denom = 0;
  for (const v of centered) denom += v * v;
  const out = new Array<number>(maxLag + 1).fill(0);
  out[0] = 1;
  if (denom === 0) return out;
  for (let lag = 1; lag <= maxLag; lag++) {
    let s = 0;
    for (let t = 0; t + lag < n; t++) s += centered[t] * centered[t + lag];
    out[lag] = s / denom;
  }
  return out;
}

/** Deterministic color swatches for results without image assets. */

/**
 * Map the first two PCA coordinates of an embedding to an HSL color:
 * hue from the angle, lightness from the radius. Nearby embeddings get
 * nearby colors, so the grid visually clusters without any thumbnails.
 */
export function swatchFromPca(pca: [number, number]): string {
  const [x, y] = pca
  const hue = Math.round(((Math.atan2(y, x) + Math.PI) / (2 * Math.PI)) * 360) % 360
  const radius = Math.sqrt(x * x + y * y)
  const lightness = 35 + Math.round(Math.min(radius, 2.0) * 20)
  return `hsl(${hue}, 70%, ${lightness}%)`
}

/** Fallback when the backend sends no PCA coordinates: hash the id. */
export function swatchFromId(id: number): string {
  let h = id >>> 0
  h = (h * 2654435761) >>> 0
  return `hsl(${h % 360}, 45%, 55%)`
}

export function swatchFor(id: number, pca?: [number, number]): string {
  return pca ? swatchFromPca(pca) : swatchFromId(id)
}

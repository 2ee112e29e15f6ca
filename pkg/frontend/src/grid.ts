import type { SearchHit } from './api'
import { swatchFor } from './swatch'

/**
 * Render result cards in exactly the order the backend returned them.
 * The grid never re-sorts: response order IS display order.
 */
export function renderGrid(
  container: HTMLElement,
  hits: SearchHit[],
  selections: Set<number>,
  onToggle: (id: number, checked: boolean) => void,
): void {
  container.textContent = ''
  for (const hit of hits) {
    const card = document.createElement('div')
    card.className = 'card'
    card.dataset.id = String(hit.id)

    const thumb = document.createElement('div')
    thumb.className = 'thumb'
    thumb.style.backgroundColor = swatchFor(hit.id, hit.pca)
    card.appendChild(thumb)

    const title = document.createElement('div')
    title.className = 'card-title'
    title.textContent = `#${hit.id}` + (hit.label !== null ? ` · class ${hit.label}` : '')
    card.appendChild(title)

    const score = document.createElement('div')
    score.className = 'card-score'
    score.textContent = `similarity ${hit.similarity.toFixed(3)}`
    card.appendChild(score)

    const label = document.createElement('label')
    label.className = 'card-check'
    const checkbox = document.createElement('input')
    checkbox.type = 'checkbox'
    checkbox.checked = selections.has(hit.id)
    checkbox.addEventListener('change', () => onToggle(hit.id, checkbox.checked))
    label.appendChild(checkbox)
    label.appendChild(document.createTextNode(' relevant'))
    card.appendChild(label)

    container.appendChild(card)
  }
}

export function renderedOrder(container: HTMLElement): number[] {
  return Array.from(container.querySelectorAll<HTMLElement>('.card')).map((el) => Number(el.dataset.id))
}

export function showError(banner: HTMLElement, message: string): void {
  banner.textContent = message
  banner.hidden = false
}

export function clearError(banner: HTMLElement): void {
  banner.textContent = ''
  banner.hidden = true
}

export function showStatus(el: HTMLElement, message: string): void {
  el.textContent = message
}

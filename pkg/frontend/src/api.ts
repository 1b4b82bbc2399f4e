// REST client for the annotation service.

import type { AnnotationDoc, AutoResponse, PageInfo } from "./types.js";

export type SaveResult =
  | { ok: true; revision: number }
  | { ok: false; conflict: number }
  | { ok: false; error: string };

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async listPages(): Promise<PageInfo[]> {
    const response = await fetch(this.url("/pages"));
    if (!response.ok) throw new Error(`list pages failed: ${response.status}`);
    return (await response.json()).pages as PageInfo[];
  }

  async fetchAuto(pageId: string): Promise<AutoResponse> {
    const response = await fetch(this.url(`/pages/${pageId}/auto`));
    if (!response.ok) throw new Error(`auto-annotation failed: ${response.status}`);
    return (await response.json()) as AutoResponse;
  }

  async fetchAnnotation(pageId: string): Promise<AnnotationDoc | null> {
    const response = await fetch(this.url(`/pages/${pageId}/annotation`));
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`annotation fetch failed: ${response.status}`);
    return (await response.json()) as AnnotationDoc;
  }

  imageUrl(pageId: string, deskewed = true): string {
    return this.url(`/pages/${pageId}/image${deskewed ? "?frame=deskewed" : ""}`);
  }

  async save(pageId: string, annotation: AnnotationDoc): Promise<SaveResult> {
    const response = await fetch(this.url(`/pages/${pageId}/annotation`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(annotation),
    });
    const body = await response.json();
    if (response.status === 200) return { ok: true, revision: body.revision as number };
    if (response.status === 409) return { ok: false, conflict: body.revision as number };
    return { ok: false, error: String(body.error ?? response.status) };
  }
}

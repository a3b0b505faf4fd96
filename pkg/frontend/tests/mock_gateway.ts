/** Route-table fetch stub: tests register canned responses per endpoint. */

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

type Handler = (request: RecordedRequest) => { status?: number; body: unknown };

export class MockGateway {
  readonly requests: RecordedRequest[] = [];
  private routes: Array<{ method: string; pattern: RegExp; handler: Handler }> = [];

  on(method: string, pattern: RegExp, handler: Handler | { status?: number; body: unknown }): void {
    const fn = typeof handler === "function" ? handler : () => handler;
    this.routes.push({ method, pattern, handler: fn });
  }

  install(): void {
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = typeof input === "string" ? input : input.toString();
      const path = url.replace(/^https?:\/\/[^/]+/, "");
      const method = init?.method ?? "GET";
      const body = init?.body ? JSON.parse(init.body as string) : null;
      const request: RecordedRequest = { method, path, body };
      this.requests.push(request);
      for (const route of this.routes) {
        if (route.method === method && route.pattern.test(path)) {
          const outcome = route.handler(request);
          return new Response(JSON.stringify(outcome.body), {
            status: outcome.status ?? 200,
            headers: { "Content-Type": "application/json" },
          });
        }
      }
      return new Response(JSON.stringify({ code: "NoRoute", message: `no mock for ${method} ${path}` }), {
        status: 500,
        headers: { "Content-Type": "application/json" },
      });
    }) as typeof fetch;
  }

  calls(method: string, pattern: RegExp): RecordedRequest[] {
    return this.requests.filter((r) => r.method === method && pattern.test(r.path));
  }
}

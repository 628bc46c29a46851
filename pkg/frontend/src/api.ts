/** Typed client for the rating service HTTP API. */

export type Phase = "practice" | "pass1" | "pass2" | "done";
export type PassNumber = 0 | 1 | 2;

export interface StimulusRef {
  stimulus_id: string;
  audio_url: string;
}

export interface SessionStateDto {
  rater_id: string;
  phase: Phase;
  pass: PassNumber | null;
  current_index: number;
  n_stimuli: number;
  n_practice: number;
  completed: { practice: string[]; pass1: string[]; pass2: string[] };
}

export interface RatingSubmission {
  rater_id: string;
  stimulus_id: string;
  pass: PassNumber;
  rating: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async getSession(raterId: string): Promise<SessionStateDto> {
    return asJson(await fetch(`${this.baseUrl}/api/session/${encodeURIComponent(raterId)}`));
  }

  async getStimuli(raterId: string, pass: PassNumber): Promise<StimulusRef[]> {
    const passParam = pass === 0 ? "practice" : String(pass);
    const url =
      `${this.baseUrl}/api/stimuli?rater_id=${encodeURIComponent(raterId)}` +
      `&pass=${passParam}`;
    const body = await asJson<{ stimuli: StimulusRef[] }>(await fetch(url));
    return body.stimuli;
  }

  async submitRating(submission: RatingSubmission): Promise<{ persisted: boolean }> {
    return asJson(
      await fetch(`${this.baseUrl}/api/ratings`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(submission),
      }),
    );
  }

  audioUrl(stimulusId: string): string {
    return `${this.baseUrl}/api/audio/${encodeURIComponent(stimulusId)}`;
  }

  exportUrl(): string {
    return `${this.baseUrl}/api/export.csv`;
  }
}

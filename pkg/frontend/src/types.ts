// Payload shapes of the study-service JSON API.

export interface Demographics {
  age: number;
  gender: string;
  license: boolean;
  years_driving: number;
  teleop_experience: boolean;
}

export interface LandoltRing {
  index: number;
  orientation: string; // needed to draw the gap; kept in memory only
  diameter_mm: number;
  contrast: number;
}

export interface IshiharaPlate {
  plate_id: string;
  image: string;
  options: string[];
}

export interface ScreeningSpec {
  landolt: LandoltRing[];
  ishihara: IshiharaPlate[];
  directions: string[];
}

export interface SessionCreated {
  session_id: string;
  phase: string;
  reason: string;
  screening?: ScreeningSpec;
}

export interface AssignmentView {
  index: number;
  content_id: string;
  asset_id: string;
  crf: number;
  compressed_issued: boolean;
  compressed_consumed: boolean;
  original_issued: boolean;
  original_consumed: boolean;
}

export type Questionnaire = Record<string, string[]>;

export interface SessionView {
  session_id: string;
  phase: string;
  index: number;
  reason: string;
  n_scenarios: number;
  assignments: AssignmentView[];
  questionnaire: Questionnaire;
  object_check_options: string[] | null;
  video_target_width_mm: number;
}

export interface PlaybackGrant {
  token: string;
  url: string;
}

export interface Answer {
  dimension: string;
  item_id: string;
  value: number;
}

export const INITIAL_DIMENSIONS = [
  "detail_loss",
  "drivability",
  "situational_awareness",
] as const;

export const REFLECTION_DIMENSIONS = ["reflection"] as const;

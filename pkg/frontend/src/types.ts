export interface CameraIntrin {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

/** World-to-camera rotation (unit quaternion wxyz) and translation. */
export interface CameraPose {
  rotation: [number, number, number, number];
  translation: [number, number, number];
}

export interface HexplaneMeta {
  spatial_resolutions: number[];
  time_resolutions: number[];
  n_features: number;
}

export interface PackMeta {
  mode: "baked" | "live";
  times: number[];
  splat_count: number;
  record_floats: number;
  files: Record<string, string>;
  hexplane?: HexplaneMeta;
  field_bbox?: { lo: number[]; hi: number[] };
}

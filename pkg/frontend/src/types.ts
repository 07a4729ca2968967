/** Payload shapes of the reconstruction service's /v1 API. */

export interface ModelCard {
  image_size: number;
  image_width: number;
  patch_size: number;
  rows: number;
  cols: number;
  channels: number;
  mode: string;
  checkpoint_step: number;
}

export interface ReconstructRequest {
  image: string; // base64 PNG at model geometry
  masked_indices?: number[];
  strategy?: string;
  ratio?: number;
  seed?: number;
  side?: string;
  anchor?: string;
  return_metrics?: boolean;
}

export interface Metrics {
  psnr: number | "inf"; // infinite PSNR arrives as the string "inf"
  ssim: number;
}

export interface ReconstructResponse {
  reconstruction: string; // base64 PNG
  masked_indices: number[];
  realized_ratio: number;
  metrics: Metrics | null;
}

export interface ServiceErrorBody {
  error: string;
  detail: string;
}

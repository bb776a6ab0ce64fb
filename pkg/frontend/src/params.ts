/** Capacity parameters: defaults, validation mirroring the service schema. */

export interface CorrectiveFactor {
  label: string;
  value: number;
}

export interface CapacityParams {
  areaPerPedestrianM2: number;
  rotationFactor: number;
  correctiveFactors: CorrectiveFactor[];
  managementCapacity: number;
}

export const DEFAULT_PARAMS: CapacityParams = {
  areaPerPedestrianM2: 2.0,
  rotationFactor: 2.5,
  correctiveFactors: [
    { label: "temperature", value: 0.7945 },
    { label: "precipitation", value: 0.8219 },
  ],
  managementCapacity: 0.7775,
};

/** Contextual help per input field, shown as tooltips next to each control. */
export const FIELD_HELP: Record<string, string> = {
  areaPerPedestrianM2:
    "Square meters each pedestrian occupies. 2 m² keeps a comfortable " +
    "sightseeing density where people can move and take pictures freely.",
  rotationFactor:
    "Visits per day: hours the site is usable divided by the mean visit " +
    "duration. A 10-hour day with 4-hour visits gives 2.5.",
  correctiveFactors:
    "Multiplicative penalties in [0, 1] for site limitations, each computed " +
    "as 1 − limited/total (e.g. 65 rainy days a year → 1 − 65/365 = 0.8219). " +
    "Add one row per limitation.",
  managementCapacity:
    "Fraction in [0, 1] expressing how adequate infrastructure, staff, and " +
    "policies are for the visitor activity.",
};

export interface FieldError {
  field: string;
  message: string;
}

/** Same acceptance ranges as the service's capacity endpoint (422 mirror). */
export function validateParams(params: CapacityParams): FieldError[] {
  const errors: FieldError[] = [];
  if (!isValidNumber(params.areaPerPedestrianM2) || params.areaPerPedestrianM2 <= 0) {
    errors.push({ field: "areaPerPedestrianM2",
                  message: "area per pedestrian must be > 0" });
  }
  if (!isValidNumber(params.rotationFactor) || params.rotationFactor <= 0) {
    errors.push({ field: "rotationFactor",
                  message: "rotation factor must be > 0" });
  }
  params.correctiveFactors.forEach((cf, index) => {
    if (!isValidNumber(cf.value) || cf.value < 0 || cf.value > 1) {
      errors.push({ field: `correctiveFactors[${index}]`,
                    message: `corrective factor ${cf.label || index} must be in [0, 1]` });
    }
  });
  if (!isValidNumber(params.managementCapacity) ||
      params.managementCapacity < 0 || params.managementCapacity > 1) {
    errors.push({ field: "managementCapacity",
                  message: "management capacity must be in [0, 1]" });
  }
  return errors;
}

function isValidNumber(v: number): boolean {
  return typeof v === "number" && Number.isFinite(v);
}

export interface CapacityRequestBody {
  walkable_area_m2: number;
  params: {
    area_per_pedestrian_m2: number;
    rotation_factor: number;
    corrective_factors: { label: string; value: number }[];
    management_capacity: number;
  };
}

export function toRequestBody(walkableAreaM2: number,
                              params: CapacityParams): CapacityRequestBody {
  return {
    walkable_area_m2: walkableAreaM2,
    params: {
      area_per_pedestrian_m2: params.areaPerPedestrianM2,
      rotation_factor: params.rotationFactor,
      corrective_factors: params.correctiveFactors.map(
        ({ label, value }) => ({ label, value })),
      management_capacity: params.managementCapacity,
    },
  };
}

export interface CapacityReport {
  pcc: number;
  rcc: number;
  ecc: number;
}

/** Two-decimal display strings for the results panel. */
export function formatReport(report: CapacityReport): Record<string, string> {
  return {
    pcc: report.pcc.toFixed(2),
    rcc: report.rcc.toFixed(2),
    ecc: report.ecc.toFixed(2),
  };
}

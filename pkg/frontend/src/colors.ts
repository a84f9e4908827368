/** Default color theme: blue/orange markers, red/green/pink AI overlays,
 * blue student / gray assistant chat bars, yellow question highlight. */

export interface Theme {
  markerInsert: string;
  markerDelete: string;
  overlay: Record<string, string>;
  chatStudent: string;
  chatAssistant: string;
  envelope: string;
  projection: string;
  questionHighlight: string;
}

export const DEFAULT_THEME: Theme = {
  markerInsert: "#2f6fd6", // blue
  markerDelete: "#e07b2f", // orange
  overlay: {
    ai_paste: "#d64545",    // red
    ai_complete: "#3fa653", // green
    ai_similar: "#e8a7c5",  // light pink
  },
  chatStudent: "#2f6fd6",
  chatAssistant: "#9aa0a6",
  envelope: "#e8e8e8",
  projection: "#6b7280",
  questionHighlight: "#f5d76e", // yellow
};

/** The two-question validation form over an exported sample CSV.
 *
 * The researcher loads the pipeline's validation export, answers the two
 * binary questions per video, and downloads the answered CSV in the same
 * column layout (doc_id, themes, q1, q2, annotator).
 */

export interface ValidationItem {
  doc_id: string;
  themes: string[];
  q1: boolean | null; // are the assigned themes accurate?
  q2: boolean | null; // do the themes cover everything discussed?
  annotator: string;
}

const HEADER = "doc_id,themes,q1,q2,annotator";

function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        current += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}

function csvField(value: string): string {
  if (/[",\n]/.test(value)) {
    return `"${value.replaceAll('"', '""')}"`;
  }
  return value;
}

function parseAnswer(raw: string): boolean | null {
  if (raw === "true") return true;
  if (raw === "false") return false;
  if (raw === "") return null;
  throw new Error(`answers must be binary, got ${JSON.stringify(raw)}`);
}

export function parseValidationCsv(text: string): ValidationItem[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0 || lines[0] !== HEADER) {
    throw new Error(`expected header ${HEADER}`);
  }
  return lines.slice(1).map((line) => {
    const [docId, themes, q1, q2, annotator] = splitCsvLine(line);
    return {
      doc_id: docId,
      themes: themes ? themes.split(";") : [],
      q1: parseAnswer(q1),
      q2: parseAnswer(q2),
      annotator: annotator ?? "",
    };
  });
}

export function serializeValidationCsv(items: ValidationItem[]): string {
  const rows = items.map((item) =>
    [
      csvField(item.doc_id),
      csvField(item.themes.join(";")),
      item.q1 === null ? "" : String(item.q1),
      item.q2 === null ? "" : String(item.q2),
      csvField(item.annotator),
    ].join(","),
  );
  return [HEADER, ...rows].join("\n") + "\n";
}

export function answerItem(
  items: ValidationItem[],
  docId: string,
  q1: boolean,
  q2: boolean,
  annotator: string,
): ValidationItem[] {
  if (!items.some((item) => item.doc_id === docId)) {
    throw new Error(`no sampled doc ${docId}`);
  }
  return items.map((item) =>
    item.doc_id === docId ? { ...item, q1, q2, annotator } : item,
  );
}

/** The next unanswered item, or null when the review round is complete. */
export function nextUnanswered(items: ValidationItem[]): ValidationItem | null {
  return items.find((item) => item.q1 === null || item.q2 === null) ?? null;
}

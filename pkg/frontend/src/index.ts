export {
  EditorSession,
  InfoPanel,
  ProofDocument,
  RenderedStatus,
  RenderedSuggestion,
  SessionOptions,
  STATUS_STYLES,
  formatPanel,
} from "./editor.js";
export {
  CheckStatus,
  DEFAULT_ENDPOINT,
  DEFAULT_TIMEOUT_MS,
  ServerError,
  SuggestClient,
  SuggestClientOptions,
  SuggestResponse,
  Suggestion,
  resolveEndpoint,
} from "./protocol.js";
export {
  LineProtocolProver,
  OutcomeKind,
  ProverOutcome,
  ProverState,
  ProverUnavailableError,
} from "./prover.js";

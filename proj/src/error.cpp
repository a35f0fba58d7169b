#include "s3/error.hpp"

namespace s3 {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::EmptyPattern: return "EmptyPattern";
    case Errc::BadVersionTag: return "BadVersionTag";
    case Errc::RootNotFound: return "RootNotFound";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::NotADigraph: return "NotADigraph";
    case Errc::MalformedEdge: return "MalformedEdge";
    case Errc::UnsupportedDot: return "UnsupportedDot";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::RaggedRow: return "RaggedRow";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::RaggedMatrix: return "RaggedMatrix";
    case Errc::UnknownRole: return "UnknownRole";
    case Errc::DuplicateVariable: return "DuplicateVariable";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::EmbedderMismatch: return "EmbedderMismatch";
    case Errc::TemplateNotFound: return "TemplateNotFound";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::DuplicateTerm: return "DuplicateTerm";
    case Errc::LexiconFormat: return "LexiconFormat";
    case Errc::NoLexiconMatch: return "NoLexiconMatch";
    case Errc::BackendError: return "BackendError";
    case Errc::UnparseablePlan: return "UnparseablePlan";
    case Errc::UnknownColumnInPlan: return "UnknownColumnInPlan";
    case Errc::ConfigError: return "ConfigError";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace s3

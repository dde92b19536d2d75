#pragma once

#include <stdexcept>
#include <string>

namespace cmos {

enum class Err {
  DimensionMismatch,
  ZeroNormVector,
  SpaceMismatch,
  EmptyInput,
  FileNotFound,
  SchemaViolation,
  DuplicateId,
  IoError,
  BackendUnavailable,
  RateLimited,
  MalformedResponse,
  ImageDecodeError,
  ContentRejected,
  TemplateMissing,
  OversizePrompt,
  ParseFailure,
  AnswerMissing,
  ScoreParseFailure,
  EncoderFailure,
  CaptioningFailure,
  EncoderMismatch,
  EmptyStore,
  EmptyBank,
  EmptyGrid,
  EmptyReference,
  IdMismatch,
  ConfigError,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
 public:
  Error(Err code, std::string message)
      : std::runtime_error(std::string(err_name(code)) + ": " + message),
        code_(code) {}

  Err code() const { return code_; }

  // Transient errors are the only ones a retry policy may re-attempt.
  bool transient() const {
    return code_ == Err::BackendUnavailable || code_ == Err::RateLimited;
  }

 private:
  Err code_;
};

inline const char* err_name(Err code) {
  switch (code) {
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::ZeroNormVector: return "ZeroNormVector";
    case Err::SpaceMismatch: return "SpaceMismatch";
    case Err::EmptyInput: return "EmptyInput";
    case Err::FileNotFound: return "FileNotFound";
    case Err::SchemaViolation: return "SchemaViolation";
    case Err::DuplicateId: return "DuplicateId";
    case Err::IoError: return "IoError";
    case Err::BackendUnavailable: return "BackendUnavailable";
    case Err::RateLimited: return "RateLimited";
    case Err::MalformedResponse: return "MalformedResponse";
    case Err::ImageDecodeError: return "ImageDecodeError";
    case Err::ContentRejected: return "ContentRejected";
    case Err::TemplateMissing: return "TemplateMissing";
    case Err::OversizePrompt: return "OversizePrompt";
    case Err::ParseFailure: return "ParseFailure";
    case Err::AnswerMissing: return "AnswerMissing";
    case Err::ScoreParseFailure: return "ScoreParseFailure";
    case Err::EncoderFailure: return "EncoderFailure";
    case Err::CaptioningFailure: return "CaptioningFailure";
    case Err::EncoderMismatch: return "EncoderMismatch";
    case Err::EmptyStore: return "EmptyStore";
    case Err::EmptyBank: return "EmptyBank";
    case Err::EmptyGrid: return "EmptyGrid";
    case Err::EmptyReference: return "EmptyReference";
    case Err::IdMismatch: return "IdMismatch";
    case Err::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace cmos

#include "hai/feedback.hpp"

#include <array>

namespace hai {

namespace {
constexpr std::array<std::string_view, 4> kFeedbackNames = {"label", "correction", "confirmation", "skip"};
}

std::string_view to_string(FeedbackKind kind) { return kFeedbackNames[static_cast<std::size_t>(kind)]; }

std::optional<FeedbackKind> parse_feedback_kind(std::string_view text) {
  for (std::size_t i = 0; i < kFeedbackNames.size(); ++i) {
    if (kFeedbackNames[i] == text) return static_cast<FeedbackKind>(i);
  }
  return std::nullopt;
}

}  // namespace hai

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rhobench {

// Every failure surfaced by the library carries a short machine-readable
// category (stable, kebab-case) plus a human-readable message. The CLI
// prints them as "error:<category>:<message>" on one line.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message),
        category_(std::move(category)),
        message_(message) {}

  const std::string& category() const noexcept { return category_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string category_;
  std::string message_;
};

}  // namespace rhobench

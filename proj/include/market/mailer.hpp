#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace market {

struct MailMessage {
  std::string to;
  std::string subject;
  std::string body;
};

class Mailer {
 public:
  virtual ~Mailer() = default;
  virtual void send(const std::string& to, const std::string& subject, const std::string& body) = 0;
};

// Keeps every message in memory and, when a path is given, appends it to a
// plain-text capture log. Stands in for SMTP delivery.
class CaptureMailer final : public Mailer {
 public:
  explicit CaptureMailer(std::optional<std::filesystem::path> log_path = std::nullopt)
      : log_path_(std::move(log_path)) {}

  void send(const std::string& to, const std::string& subject, const std::string& body) override;

  std::vector<MailMessage> messages() const;
  std::optional<MailMessage> last_to(const std::string& to) const;

 private:
  std::optional<std::filesystem::path> log_path_;
  mutable std::mutex mutex_;
  std::vector<MailMessage> messages_;
};

// First line of a mail body that is exactly six ASCII digits.
std::optional<std::string> extract_otp(const std::string& body);

}  // namespace market

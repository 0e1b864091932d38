#include "market/mailer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace market {

void CaptureMailer::send(const std::string& to, const std::string& subject, const std::string& body) {
  std::lock_guard lock(mutex_);
  messages_.push_back({to, subject, body});
  if (log_path_) {
    std::ofstream out(*log_path_, std::ios::app);
    out << "To: " << to << "\nSubject: " << subject << "\n\n" << body << "\n--\n";
  }
}

std::vector<MailMessage> CaptureMailer::messages() const {
  std::lock_guard lock(mutex_);
  return messages_;
}

std::optional<MailMessage> CaptureMailer::last_to(const std::string& to) const {
  std::lock_guard lock(mutex_);
  for (auto it = messages_.rbegin(); it != messages_.rend(); ++it) {
    if (it->to == to) return *it;
  }
  return std::nullopt;
}

std::optional<std::string> extract_otp(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() == 6 && std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return line;
    }
  }
  return std::nullopt;
}

}  // namespace market

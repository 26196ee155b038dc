#include "treeqa/net.hpp"

#include "treeqa/error.hpp"

namespace treeqa::net {

Endpoint parse_endpoint(std::string_view url, std::string_view default_path) {
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos) throw Error(ErrorKind::Config, "URL without scheme: " + std::string(url));
    const auto slash = url.find('/', scheme + 3);
    Endpoint ep;
    if (slash == std::string_view::npos) {
        ep.base = std::string(url);
        ep.path = std::string(default_path);
    } else {
        ep.base = std::string(url.substr(0, slash));
        ep.path = std::string(url.substr(slash));
    }
    return ep;
}

}  // namespace treeqa::net

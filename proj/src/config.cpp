namespace ccm {}
